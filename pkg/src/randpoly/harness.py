"""Experiment orchestration: parse a config, run the n-schedule, fit rates, emit files."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy import stats

from .bodies import body_from_spec
from .errors import ConfigError
from .functionals import (FUNCTIONALS, Context, EstimateRecord, _resolve, estimate_expectation,
                          scaling_exponent)
from .samplers import HYPERPLANE_DENSITIES, POINT_DENSITIES
from .theory import THEORY_TAG_FOR, TheoryValue, rhs_theorem

log = logging.getLogger(__name__)

CSV_COLUMNS = ("functional", "body", "density", "d", "n", "R", "estimate", "stderr", "unbounded_frac",
               "clamped_frac", "seed", "scaled", "theory", "ratio")

# config-level functional names and the estimators they expand to
_FUNCTIONAL_ALIASES = {
    "mean-width-gap": ("mean-width-gap",),
    "facets": ("facets-circumscribed",),
    "missed-weight": ("missed-weight",),
    "f0": ("f0-inscribed",),
    "efron": ("efron-lhs", "efron-rhs"),
}
_MODEL_OF = {"mean-width-gap": "circumscribed", "facets": "circumscribed", "missed-weight": "inscribed",
             "f0": "inscribed", "efron": "inscribed"}


@dataclass
class ExperimentConfig:
    body: dict
    model: str
    functional: str
    schedule: list[int]
    replications: int
    density: str | None = None
    density_params: dict = field(default_factory=dict)
    weight: str = "constant"
    weight_params: dict = field(default_factory=dict)
    mode: str = "exact-volume"
    mc_points: int = 10_000
    seed: int = 0
    output: str | None = None
    name: str = "experiment"
    common_random_numbers: bool = False

    def __post_init__(self):
        if self.density is None:
            self.density = "q-unit" if self.model == "circumscribed" else "uniform"
        self.validate()

    def validate(self) -> None:
        if self.model not in ("inscribed", "circumscribed"):
            raise ConfigError(f"model must be inscribed or circumscribed, got {self.model!r}")
        if self.functional not in _FUNCTIONAL_ALIASES:
            raise ConfigError(f"unknown functional {self.functional!r}; expected one of {sorted(_FUNCTIONAL_ALIASES)}")
        if _MODEL_OF[self.functional] != self.model:
            raise ConfigError(f"functional {self.functional!r} belongs to the {_MODEL_OF[self.functional]} model")
        allowed = HYPERPLANE_DENSITIES if self.model == "circumscribed" else POINT_DENSITIES
        if self.density not in allowed:
            raise ConfigError(f"density {self.density!r} does not fit the {self.model} model; use one of {allowed}")
        sched = list(self.schedule)
        if not sched or any(int(n) != n or n < 1 for n in sched):
            raise ConfigError("schedule must be a nonempty list of positive integers")
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise ConfigError("schedule must be strictly increasing")
        self.schedule = [int(n) for n in sched]
        if int(self.replications) < 2:
            raise ConfigError("replications must be at least 2")
        if self.common_random_numbers and self.model != "circumscribed":
            raise ConfigError("common random numbers are available for the circumscribed model only")
        if self.mode not in ("exact-volume", "mc"):
            raise ConfigError(f"unknown missed-weight mode {self.mode!r}")
        body_from_spec(self.body)  # raises on a malformed body

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        dens = data.pop("density", None)
        if isinstance(dens, dict):
            data["density"] = dens.get("name")
            data["density_params"] = dens.get("params", {}) or {}
        else:
            data["density"] = dens
        wt = data.pop("weight", "constant")
        if isinstance(wt, dict):
            data["weight"] = wt.get("name", "constant")
            data["weight_params"] = wt.get("params", {}) or {}
        else:
            data["weight"] = wt
        if "R" in data:
            data["replications"] = data.pop("R")
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        missing = {"body", "model", "functional", "schedule", "replications"} - set(data)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        text = Path(path).read_text()
        if str(path).endswith((".yaml", ".yml")):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        return cls.from_mapping(data)

    def context(self) -> Context:
        wparams = dict(self.weight_params)
        if self.weight == "polar" and "base" not in wparams:
            wparams["base"] = self.body
        return Context(body=self.body, density=self.density, density_params=dict(self.density_params),
                       weight=self.weight, weight_params=wparams, mode=self.mode, mc_points=int(self.mc_points),
                       crn_max=max(self.schedule) if self.common_random_numbers else None)


@dataclass
class ResultRow:
    record: EstimateRecord
    exponent: float
    scaled: float
    theory: float
    ratio: float

    def as_dict(self) -> dict:
        out = self.record.to_dict()
        out.update(scaled=self.scaled, theory=self.theory, ratio=self.ratio)
        return {k: out[k] for k in CSV_COLUMNS}


@dataclass
class ResultTable:
    rows: list[ResultRow]
    config: dict = field(default_factory=dict)
    theory: dict = field(default_factory=dict)

    def select(self, functional: str) -> list[ResultRow]:
        return [r for r in self.rows if r.record.functional == functional]

    @property
    def functionals(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.record.functional not in seen:
                seen.append(r.record.functional)
        return seen


def theory_value(functional: str, ctx: Context) -> TheoryValue:
    """The limit constant that the scaled column of ``functional`` approaches."""
    res = _resolve(ctx.key())
    tag = THEORY_TAG_FOR[functional]
    if FUNCTIONALS[functional].model == "circumscribed":
        return rhs_theorem(tag, res.K, q=res.q)
    return rhs_theorem(tag, res.K, rho=res.rho, lam=res.lam)


def run(config: ExperimentConfig, workers: int = 1, seed: int | None = None) -> ResultTable:
    seed = config.seed if seed is None else int(seed)
    ctx = config.context()
    rows = []
    theories = {}
    for functional in _FUNCTIONAL_ALIASES[config.functional]:
        tv = theory_value(functional, ctx)
        theories[functional] = tv.to_dict()
        for n in config.schedule:
            rec = estimate_expectation(functional, ctx, n, int(config.replications), seed=seed, workers=workers)
            e = scaling_exponent(functional, rec.d)
            scaled = rec.estimate * n ** e
            ratio = scaled / tv.value if tv.value != 0.0 else math.nan
            rows.append(ResultRow(rec, e, scaled, tv.value, ratio))
            log.info("%s n=%d estimate=%.6g scaled=%.6g ratio=%.6g", functional, n, rec.estimate, scaled, ratio)
    cfg = {k: getattr(config, k) for k in config.__dataclass_fields__}
    cfg["seed"] = seed
    return ResultTable(rows, cfg, theories)


# ---------------------------------------------------------------------------
# rate fitting


@dataclass(frozen=True)
class RateFit:
    exponent: float
    constant: float
    r2: float
    used: int
    excluded: int


def fit_rate(table_or_n, estimates=None, functional: str | None = None) -> RateFit:
    """Least-squares fit of log(estimate) = log(C) + exponent * log(n)."""
    if estimates is None:
        rows = table_or_n.rows if isinstance(table_or_n, ResultTable) else table_or_n
        if functional is not None:
            rows = [r for r in rows if r.record.functional == functional]
        n = np.array([r.record.n for r in rows], dtype=float)
        est = np.array([r.record.estimate for r in rows], dtype=float)
    else:
        n = np.asarray(table_or_n, dtype=float)
        est = np.asarray(estimates, dtype=float)
    ok = np.isfinite(est) & (est > 0)
    excluded = int((~ok).sum())
    if excluded:
        log.warning("fit_rate: excluding %d non-positive estimates", excluded)
    if ok.sum() < 3:
        raise ValueError("need at least three positive estimates to fit a rate")
    fit = stats.linregress(np.log(n[ok]), np.log(est[ok]))
    return RateFit(float(fit.slope), float(math.exp(fit.intercept)), float(fit.rvalue ** 2), int(ok.sum()), excluded)


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def table_to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in table.rows:
        d = row.as_dict()
        w.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


_INT_COLUMNS = {"d", "n", "R", "seed"}
_STR_COLUMNS = {"functional", "body", "density"}


def read_csv(text: str) -> list[dict]:
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in rec.items():
            row[k] = v if k in _STR_COLUMNS else int(v) if k in _INT_COLUMNS else float(v)
        out.append(row)
    return out


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, np.generic):
        return _json_safe(v.item())
    return v


def table_to_json(table: ResultTable) -> str:
    rows = [{k: _json_safe(v) for k, v in r.as_dict().items()} for r in table.rows]
    doc = {"config": table.config, "theory": table.theory, "rows": rows}
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_safe)


def table_to_dat(table: ResultTable) -> str:
    lines = []
    for functional in table.functionals:
        lines.append(f"# {functional}: n scaled stderr theory")
        for r in table.select(functional):
            lines.append(" ".join(_fmt(v) for v in (r.record.n, r.scaled, r.record.stderr, r.theory)))
        lines.append("")
        lines.append("")
    return "\n".join(lines)


def emit(table: ResultTable, out_dir, stem: str = "results", formats=("csv", "json", "dat", "png")) -> dict:
    """Write the table in the requested formats; returns {format: path}."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    paths = {}
    writers = {"csv": table_to_csv, "json": table_to_json, "dat": table_to_dat}
    for fmt in formats:
        path = out / f"{stem}.{fmt}"
        if fmt == "png":
            from .plotting import plot_table

            plot_table(table, path)
        else:
            path.write_text(writers[fmt](table))
        paths[fmt] = path
    return paths
