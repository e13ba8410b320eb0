"""Monte-Carlo estimators for expectations of random polytope functionals.

Every replication r of a run draws from its own counter-based stream keyed by
(seed, tag, n, r). Replications are processed in fixed-size chunks whose
summary statistics are merged in chunk order, so the estimate does not
depend on how many workers evaluated the chunks.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .bodies import ConvexBody, body_from_spec, body_label, parallel_body
from .config import TOL
from .errors import ConfigError, DegenerateHullError
from .hull import Polytope, convex_hull, planar_hull_batch, qhull_stats, volume
from .lp import lp_facet_count
from .rng import TAG_DEFAULT, TAG_EFRON_LHS, TAG_EFRON_RHS, replication_generators
from .samplers import (DensityRho, HyperplaneDensityQ, hyperplane_density, point_density,
                       sample_hyperplanes, sample_points)
from .sphere import omega

CHUNK = 500
_BATCH_PLANAR_MAX_N = 64


# ---------------------------------------------------------------------------
# records and merging


@dataclass
class RunningStats:
    """Count, mean and sum of squared deviations; merges are associative."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values: np.ndarray) -> "RunningStats":
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return cls()
        mean = float(values.mean())
        return cls(int(values.size), mean, float(np.sum((values - mean) ** 2)))

    def merge(self, other: "RunningStats") -> "RunningStats":
        if other.count == 0:
            return RunningStats(self.count, self.mean, self.m2)
        if self.count == 0:
            return RunningStats(other.count, other.mean, other.m2)
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return RunningStats(n, mean, m2)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else math.nan

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count > 1 else math.nan


@dataclass
class EstimateRecord:
    functional: str
    body: str
    density: str
    d: int
    n: int
    R: int
    estimate: float
    stderr: float
    unbounded: int = 0
    clamped: int = 0
    seed: int = 0

    @property
    def unbounded_frac(self) -> float:
        return self.unbounded / self.R

    @property
    def clamped_frac(self) -> float:
        return self.clamped / self.R

    def to_dict(self) -> dict:
        out = asdict(self)
        out["unbounded_frac"] = self.unbounded_frac
        out["clamped_frac"] = self.clamped_frac
        return out


# ---------------------------------------------------------------------------
# weights and missed weight


@dataclass(frozen=True)
class WeightLambda:
    """Integrable weight on K; ``constant`` is set when the weight is constant."""

    evaluate: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    constant: float | None = None
    continuous_near_boundary: bool = True

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(np.atleast_2d(np.asarray(x, dtype=float)))


def constant_weight(value: float = 1.0) -> WeightLambda:
    value = float(value)
    return WeightLambda(lambda x: np.full(len(x), value), "constant", constant=value)


def polar_weight(K: ConvexBody) -> WeightLambda:
    """omega_d^{-1} |x|^{-(d+1)} on K* minus (K + B)^*, zero on (K + B)^*.

    Twice its integral over K* minus a polytope P equals W(P^*) - W(K).
    """
    d = K.dim
    om = omega(d)

    def evaluate(x):
        r = np.linalg.norm(x, axis=1)
        out = np.zeros(len(x))
        ok = r > 0
        # x lies outside (K + B)^* iff h(K, x) + |x| > 1
        outside = ok.copy()
        outside[ok] = K.support(x[ok]) + r[ok] > 1.0
        out[outside] = r[outside] ** (-(d + 1)) / om
        return out

    return WeightLambda(evaluate, "polar")


def weight_from_name(K: ConvexBody, name: str, params: dict | None = None) -> WeightLambda:
    params = dict(params or {})
    if name == "constant":
        return constant_weight(params.get("value", 1.0))
    if name == "polar":
        base = params.get("base")
        if base is None:
            raise ConfigError("polar weight needs the circumscribed body as params.base")
        return polar_weight(body_from_spec(base))
    raise ConfigError(f"unknown weight {name!r}")


@dataclass(frozen=True)
class MissedWeight:
    value: float
    stderr: float


def missed_weight(K: ConvexBody, P: Polytope | None, lam: WeightLambda, mode: str = "mc",
                  m: int = 10_000, rng: np.random.Generator | None = None,
                  box: tuple[np.ndarray, np.ndarray] | None = None) -> MissedWeight:
    """int over K minus P of lambda; P None means a lower-dimensional hull."""
    if mode == "exact-volume":
        if lam.constant is None:
            raise ConfigError("exact-volume mode needs a constant weight")
        inner = 0.0 if P is None else volume(P)
        return MissedWeight(lam.constant * max(K.volume() - inner, 0.0), 0.0)
    if mode != "mc":
        raise ConfigError(f"unknown missed-weight mode {mode!r}")
    if rng is None:
        rng = np.random.default_rng()
    lo, hi = K.bounding_box() if box is None else box
    vol_box = float(np.prod(hi - lo))
    x = lo + (hi - lo) * rng.random((m, K.dim))
    vals = lam(x) * K.contains(x)
    if P is not None:
        vals = vals * ~P.contains(x)
    vals = vals * vol_box
    return MissedWeight(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(m)))


# ---------------------------------------------------------------------------
# circumscribed statistics straight from Qhull


@dataclass(frozen=True)
class CircumStats:
    bounded: bool
    facets: int
    within: bool
    width: float | None


def _dual_hull(dual: np.ndarray):
    n, d = dual.shape
    if n <= d:
        return None
    try:
        return ConvexHull(dual)
    except QhullError:
        return None


def circumscribed_stats(u: np.ndarray, t: np.ndarray, K1: ConvexBody, need_width: bool) -> CircumStats:
    """Boundedness, facet count, containment in K1 and mean width of the intersection.

    The circumscribed set is the polar of the dual hull conv(u_i / t_i): its
    vertices are a_f / b_f over dual facets, and in d = 3 the edge dual to a
    hull edge [x_a, x_b] has exterior angle equal to the angle between x_a
    and x_b.
    """
    dual = u / t[:, None]
    d = dual.shape[1]
    hull = _dual_hull(dual)
    if hull is None:
        return CircumStats(False, lp_facet_count(u, t), False, None)
    normals = hull.equations[:, :d]
    offsets = -hull.equations[:, d]
    scale = float(np.abs(dual).max())
    if np.any(offsets <= TOL.orient_rel * scale):
        return CircumStats(False, lp_facet_count(u, t), False, None)
    facets = len(hull.vertices)
    verts = normals / offsets[:, None]
    within = bool(np.all(K1.contains(verts, tol=1e-12)))
    width = None
    if need_width and within:
        width = polar_mean_width(hull, verts)
    return CircumStats(True, facets, within, width)


def polar_mean_width(hull: ConvexHull, verts: np.ndarray) -> float:
    d = verts.shape[1]
    if d == 2:
        ang = np.arctan2(verts[:, 1], verts[:, 0])
        ring = verts[np.argsort(ang)]
        return float(np.linalg.norm(ring - np.roll(ring, -1, axis=0), axis=1).sum()) / math.pi
    if d == 3:
        simp = hull.simplices
        neigh = hull.neighbors
        f = np.repeat(np.arange(len(simp)), 3)
        g = neigh.ravel()
        opposite = np.tile(np.arange(3), len(simp))
        keep = f < g
        f, g, opposite = f[keep], g[keep], opposite[keep]
        # the two hull vertices shared by facets f and g
        cols = np.array([[1, 2], [0, 2], [0, 1]])[opposite]
        a = simp[f, cols[:, 0]]
        b = simp[f, cols[:, 1]]
        pts = hull.points
        xa = pts[a] / np.linalg.norm(pts[a], axis=1, keepdims=True)
        xb = pts[b] / np.linalg.norm(pts[b], axis=1, keepdims=True)
        angle = np.arccos(np.clip(np.sum(xa * xb, axis=1), -1.0, 1.0))
        length = np.linalg.norm(verts[f] - verts[g], axis=1)
        return float(np.sum(length * angle) / (4.0 * math.pi))
    raise ValueError("fast mean width only for d = 2, 3")


# ---------------------------------------------------------------------------
# functional registry


@dataclass(frozen=True)
class Context:
    """Everything a replication needs, rebuilt from plain data in each worker."""

    body: dict
    density: str
    density_params: dict = field(default_factory=dict)
    weight: str = "constant"
    weight_params: dict = field(default_factory=dict)
    mode: str = "exact-volume"
    mc_points: int = 10_000
    crn_max: int | None = None

    def key(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class _Resolved:
    K: ConvexBody
    K1: ConvexBody | None
    rho: DensityRho | None
    q: HyperplaneDensityQ | None
    lam: WeightLambda | None
    width_K: float | None
    box: tuple


@lru_cache(maxsize=32)
def _resolve(key: str) -> _Resolved:
    ctx = Context(**json.loads(key))
    K = body_from_spec(ctx.body)
    if ctx.density in ("q-unit", "q-power"):
        q = hyperplane_density(K, ctx.density, ctx.density_params)
        return _Resolved(K, parallel_body(K), None, q, None, K.mean_width(), K.bounding_box())
    rho = point_density(K, ctx.density, ctx.density_params)
    lam = weight_from_name(rho.body, ctx.weight, ctx.weight_params)
    return _Resolved(rho.body, None, rho, None, lam, None, rho.body.bounding_box())


def _inscribed_points(res: _Resolved, n: int, gens) -> list[np.ndarray]:
    return [sample_points(res.K, res.rho, n, g) for _, g in gens]


def _f0_values(points: list[np.ndarray], d: int) -> np.ndarray:
    n = len(points[0]) if points else 0
    if d == 2 and 3 <= n <= _BATCH_PLANAR_MAX_N:
        f0, _ = planar_hull_batch(np.stack(points))
        return f0.astype(float)
    return np.array([qhull_stats(p)[0] for p in points], dtype=float)


def _volumes(points: list[np.ndarray], d: int) -> np.ndarray:
    n = len(points[0]) if points else 0
    if d == 2 and 3 <= n <= _BATCH_PLANAR_MAX_N:
        _, area = planar_hull_batch(np.stack(points))
        return area
    return np.array([qhull_stats(p)[1] for p in points], dtype=float)


def _kernel_f0(res, ctx, n, gens):
    values = _f0_values(_inscribed_points(res, n, gens), res.K.dim)
    return values, 0, 0


def _kernel_efron_rhs(res, ctx, n, gens):
    """n times the density mass missed by the hull of n - 1 points."""
    if n < 2:
        return np.full(len(gens), float(n)), 0, 0
    if res.rho.name == "uniform":
        pts = _inscribed_points(res, n - 1, gens)
        vol = _volumes(pts, res.K.dim)
        missed = np.clip(1.0 - vol / res.rho.params["volume"], 0.0, 1.0)
        return n * missed, 0, 0
    out = np.empty(len(gens))
    for i, (_, g) in enumerate(gens):
        pts = sample_points(res.K, res.rho, n - 1, g)
        P = _polytope_or_none(pts)
        lam = WeightLambda(res.rho.evaluate, "rho")
        out[i] = n * missed_weight(res.K, P, lam, "mc", ctx.mc_points, g, res.box).value
    return out, 0, 0


def _polytope_or_none(pts):
    if len(pts) <= pts.shape[1]:
        return None
    try:
        return convex_hull(pts, method="qhull")
    except DegenerateHullError:
        return None


def _kernel_missed(res, ctx, n, gens):
    if ctx.mode == "exact-volume":
        if res.lam.constant is None:
            raise ConfigError("exact-volume mode needs a constant weight")
        pts = _inscribed_points(res, n, gens)
        vol = _volumes(pts, res.K.dim)
        return res.lam.constant * np.maximum(res.K.volume() - vol, 0.0), 0, 0
    out = np.empty(len(gens))
    for i, (_, g) in enumerate(gens):
        pts = sample_points(res.K, res.rho, n, g)
        out[i] = missed_weight(res.K, _polytope_or_none(pts), res.lam, "mc", ctx.mc_points, g, res.box).value
    return out, 0, 0


def _hyperplanes(res, ctx, n, g):
    m = n if ctx.crn_max is None else ctx.crn_max
    u, t = sample_hyperplanes(res.K, res.q, m, g)
    return u[:n], t[:n]


def _kernel_facets(res, ctx, n, gens):
    out = []
    unbounded = 0
    for _, g in gens:
        u, t = _hyperplanes(res, ctx, n, g)
        st = circumscribed_stats(u, t, res.K1, need_width=False)
        unbounded += not st.bounded
        out.append(st.facets)
    return np.array(out, dtype=float), unbounded, 0


def _kernel_gap(res, ctx, n, gens):
    out = []
    unbounded = clamped = 0
    clamp = 2.0  # W(K + B) - W(K)
    for _, g in gens:
        u, t = _hyperplanes(res, ctx, n, g)
        st = circumscribed_stats(u, t, res.K1, need_width=True)
        unbounded += not st.bounded
        if st.within:
            out.append(max(st.width - res.width_K, 0.0))
        else:
            clamped += 1
            out.append(clamp)
    return np.array(out, dtype=float), unbounded, clamped


@dataclass(frozen=True)
class Functional:
    name: str
    model: str
    kernel: Callable
    tag: int
    scaling: str  # "gap" -> n^{2/(d+1)}, "count" -> n^{-(d-1)/(d+1)}


FUNCTIONALS: dict[str, Functional] = {
    "f0-inscribed": Functional("f0-inscribed", "inscribed", _kernel_f0, TAG_DEFAULT, "count"),
    "efron-lhs": Functional("efron-lhs", "inscribed", _kernel_f0, TAG_EFRON_LHS, "count"),
    "efron-rhs": Functional("efron-rhs", "inscribed", _kernel_efron_rhs, TAG_EFRON_RHS, "count"),
    "missed-weight": Functional("missed-weight", "inscribed", _kernel_missed, TAG_DEFAULT, "gap"),
    "facets-circumscribed": Functional("facets-circumscribed", "circumscribed", _kernel_facets, TAG_DEFAULT, "count"),
    "mean-width-gap": Functional("mean-width-gap", "circumscribed", _kernel_gap, TAG_DEFAULT, "gap"),
}


def scaling_exponent(functional: str, d: int) -> float:
    kind = FUNCTIONALS[functional].scaling
    return 2.0 / (d + 1) if kind == "gap" else -(d - 1) / (d + 1)


def _run_chunk(args):
    name, key, n, seed, start, stop, tag = args
    func = FUNCTIONALS[name]
    ctx = Context(**json.loads(key))
    res = _resolve(key)
    stream_n = n if ctx.crn_max is None else 0
    tag = func.tag if tag is None else tag
    values, unb, cl = func.kernel(res, ctx, n, _ReplicationIterator(seed, tag, stream_n, start, stop))
    return RunningStats.of(values), int(unb), int(cl), np.asarray(values)


class _ReplicationIterator:
    """View over the replication streams of one chunk.

    Iteration re-keys a single generator, so each yielded generator must be
    consumed before advancing; never materialize the iterator into a list.
    """

    def __init__(self, seed, tag, n, start, stop):
        self.args = (seed, tag, n, range(start, stop))

    def __iter__(self):
        return replication_generators(*self.args)

    def __len__(self):
        return len(self.args[3])


def estimate_expectation(functional: str, ctx: Context, n: int, R: int, seed: int = 0,
                         workers: int = 1, chunk: int = CHUNK, return_values: bool = False,
                         tag: int | None = None):
    """Mean and standard error of a functional over R replications.

    Deterministic in (functional, ctx, n, R, seed); ``workers`` only changes
    how chunks are scheduled. ``tag`` overrides the functional's stream tag,
    e.g. to make two functionals on the same seed independent.
    """
    if functional not in FUNCTIONALS:
        raise ConfigError(f"unknown functional {functional!r}; expected one of {sorted(FUNCTIONALS)}")
    if R < 2:
        raise ConfigError("need at least two replications")
    if n < 1:
        raise ConfigError("n must be at least 1")
    key = ctx.key()
    jobs = [(functional, key, n, seed, s, min(s + chunk, R), tag) for s in range(0, R, chunk)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]
    stats = RunningStats()
    unb = cl = 0
    for st, u, c, _ in parts:
        stats = stats.merge(st)
        unb += u
        cl += c
    res = _resolve(key)
    rec = EstimateRecord(functional, body_label(body_from_spec(ctx.body)), _density_label(ctx), res.K.dim,
                         n, R, stats.mean, stats.stderr, unb, cl, seed)
    if return_values:
        return rec, np.concatenate([p[3] for p in parts])
    return rec


def _density_label(ctx: Context) -> str:
    if ctx.density == "polar-q":
        return "polar-q(" + ctx.density_params.get("q", "q-unit") + ")"
    return ctx.density
