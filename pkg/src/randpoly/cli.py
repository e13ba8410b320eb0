"""Command line entry point: ``randpoly run | theory | check``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from .bodies import body_from_spec
from .checks import SUITES
from .errors import ConfigError
from .harness import ExperimentConfig, emit, fit_rate, run, table_to_csv
from .samplers import hyperplane_density, point_density
from .theory import TAGS, rhs_theorem


def _env_int(name: str, default):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from exc


def _load_body(text: str) -> dict:
    path = Path(text)
    if path.exists():
        text = path.read_text()
    return json.loads(text)


def cmd_run(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    seed = args.seed if args.seed is not None else _env_int("RANDPOLY_SEED", cfg.seed)
    threads = args.threads if args.threads is not None else _env_int("RANDPOLY_THREADS", 1)
    table = run(cfg, workers=max(1, threads), seed=seed)
    out_dir = args.out or cfg.output or "."
    paths = emit(table, out_dir, stem=args.stem or cfg.name)
    sys.stdout.write(table_to_csv(table))
    for functional in table.functionals:
        try:
            fit = fit_rate(table, functional=functional)
            print(f"# fit {functional}: exponent={fit.exponent:.4f} constant={fit.constant:.6g} r2={fit.r2:.5f}")
        except ValueError:
            pass
    for fmt, path in paths.items():
        print(f"# wrote {fmt}: {path}")
    return 0


def cmd_theory(args) -> int:
    spec = _load_body(args.body)
    K = body_from_spec(spec)
    q = rho = None
    if args.tag in ("gener1", "gener2"):
        q = hyperplane_density(K, args.density or "q-unit")
    elif args.tag in ("weighted", "weightedcor"):
        rho = point_density(K, args.density or "uniform")
        K = rho.body
    tv = rhs_theorem(args.tag, K, q=q, rho=rho, p=args.p)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["functional", "body", "tag", "value", "error"])
    w.writerow([f"theory:{tv.source}", tv.body, tv.source, repr(tv.value), repr(tv.error)])
    return 0


def cmd_check(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    kwargs = {}
    all_ok = True
    for name in names:
        fn = SUITES[name]
        kwargs = {}
        if name == "efron" and args.reps is not None:
            kwargs["R"] = args.reps
        if name in ("efron", "duality"):
            kwargs["workers"] = max(1, args.threads if args.threads is not None else _env_int("RANDPOLY_THREADS", 1))
            seed = args.seed if args.seed is not None else _env_int("RANDPOLY_SEED", None)
            if seed is not None:
                kwargs["seed"] = seed
        for res in fn(**kwargs):
            print(res.line())
            all_ok &= res.passed
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="randpoly", description="Random inscribed and circumscribed polytopes")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config and write CSV/JSON/.dat/PNG")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--threads", type=int)
    r.add_argument("--out")
    r.add_argument("--stem", help="file name stem (default: config name)")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("theory", help="evaluate a limit constant")
    t.add_argument("--body", required=True, help="body JSON text or path to a JSON file")
    t.add_argument("--tag", required=True, choices=TAGS)
    t.add_argument("--density", help="q-unit/q-power for gener tags, uniform/polar-q for weighted tags")
    t.add_argument("--p", type=float, help="exponent for omega_p")
    t.set_defaults(func=cmd_theory)

    c = sub.add_parser("check", help="run a self-check suite; exit code 0 iff all checks pass")
    c.add_argument("--suite", required=True, choices=[*SUITES, "all"])
    c.add_argument("--reps", type=int, help="replications for the efron suite")
    c.add_argument("--seed", type=int)
    c.add_argument("--threads", type=int)
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
