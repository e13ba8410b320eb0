"""Point and hyperplane samplers, plus numerical checks of density conditions.

Points are drawn by box rejection against a density bound. Hyperplanes
H(u, t) = {x : <x, u> = t} are drawn from the joint law with density
q(t, u) dt sigma(du), sigma the uniform probability measure on the sphere:
first u from the direction marginal Z(u) = int q(t, u) dt, then t given u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .bodies import ConvexBody, polar_body
from .config import TOL
from .errors import ConfigError, SamplingError
from .rng import uniform_directions
from .sphere import integrate_sphere, omega

_TABLE_POINTS = 512
# relative slack on the inner strip edge t = h(K,u), which boundary points
# of K* hit exactly up to rounding
_EDGE = 1e-12
_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


# ---------------------------------------------------------------------------
# point densities


@dataclass(frozen=True)
class DensityRho:
    """A probability density on ``body`` with a finite upper bound."""

    body: ConvexBody
    evaluate: Callable[[np.ndarray], np.ndarray]
    sup_bound: float
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(np.atleast_2d(np.asarray(x, dtype=float)))


def uniform_density(K: ConvexBody) -> DensityRho:
    vol = K.volume()
    inv = 1.0 / vol

    def evaluate(x):
        return np.where(K.contains(x), inv, 0.0)

    return DensityRho(K, evaluate, inv, "uniform", {"volume": vol})


def polar_q_density(K: ConvexBody, q: "HyperplaneDensityQ | None" = None) -> DensityRho:
    """Density on K* induced by the hyperplane law mu_q on K.

    rho(x) = omega_d^{-1} q(1/|x|, x/|x|) |x|^{-(d+1)} on K* minus (K+B)^*.
    """
    if q is None:
        q = q_unit(K)
    Kp = polar_body(K)
    d = K.dim
    om = omega(d)
    rmin = 1.0 / (K.circumradius() + 1.0)
    bound = q.sup_bound * rmin ** (-(d + 1)) / om

    def evaluate(x):
        r = np.linalg.norm(x, axis=1)
        out = np.zeros(len(x))
        ok = r > 0
        u = x[ok] / r[ok, None]
        t = 1.0 / r[ok]
        h = K.support(u)
        inside = (t >= h * (1.0 - _EDGE)) & (t <= h + 1.0)
        out[ok] = np.where(inside, q(t, u) * r[ok] ** (-(d + 1)) / om, 0.0)
        return out

    return DensityRho(Kp, evaluate, bound, "polar-q", {"q": q.name})


def sample_points(K: ConvexBody, rho: DensityRho, m: int, rng: np.random.Generator,
                  max_rejections: int = TOL.max_consecutive_rejections) -> np.ndarray:
    """m iid points with density rho on K, by rejection from the bounding box."""
    d = K.dim
    lo, hi = K.bounding_box()
    width = hi - lo
    M = rho.sup_bound
    out = np.empty((m, d))
    filled = 0
    streak = 0
    # a conservative acceptance guess keeps the number of batches small
    accept_guess = 0.25
    while filled < m:
        need = m - filled
        batch = int(min(max(2 * need / accept_guess, 16), 1 << 16))
        # one call per batch: d box coordinates plus the acceptance variable
        raw = rng.random((batch, d + 1))
        x = lo + width * raw[:, :d]
        w = raw[:, d]
        dens = rho.evaluate(x)
        if np.any(dens > M * (1.0 + 1e-9)):
            raise SamplingError(f"density {rho.name!r} exceeds its declared bound {M!r}")
        acc = np.flatnonzero(w * M < dens)
        if acc.size == 0:
            streak += batch
            if streak > max_rejections:
                raise SamplingError(f"more than {max_rejections} consecutive rejections")
            accept_guess = max(accept_guess / 4, 1e-4)
            continue
        streak = batch - 1 - acc[-1]
        take = acc[:need]
        out[filled:filled + take.size] = x[take]
        filled += take.size
        accept_guess = max(acc.size / batch, 1e-4)
    return out


def sample_point(K: ConvexBody, rho: DensityRho, rng: np.random.Generator) -> np.ndarray:
    return sample_points(K, rho, 1, rng)[0]


# ---------------------------------------------------------------------------
# hyperplane densities


@dataclass(frozen=True)
class HyperplaneDensityQ:
    """Density q(t, u) of a hyperplane law on the strip h(K,u) <= t <= h(K,u) + 1.

    ``direction_mass`` returns Z(u) = int q(t, u) dt; when omitted it is
    computed by Gauss-Legendre quadrature. ``z_sup`` bounds Z from above and
    is the envelope of the direction rejection step. ``inverse_t`` maps
    (u, uniform variates) to t exactly; otherwise t is drawn by inverting a
    tabulated CDF.
    """

    body: ConvexBody
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    name: str = "custom"
    params: dict = field(default_factory=dict)
    sup_bound: float = 1.0
    direction_mass: Callable[[np.ndarray], np.ndarray] | None = None
    z_sup: float | None = None
    constant_marginal: bool = False
    inverse_t: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __call__(self, t, u) -> np.ndarray:
        return self.evaluate(np.asarray(t, dtype=float), np.atleast_2d(np.asarray(u, dtype=float)))

    def marginal(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if self.direction_mass is not None:
            return self.direction_mass(u)
        h = self.body.support(u)
        t = h[:, None] + 0.5 * (_GL_X[None, :] + 1.0)
        vals = self.evaluate(t.ravel(), np.repeat(u, len(_GL_X), axis=0)).reshape(t.shape)
        return 0.5 * vals @ _GL_W

    def envelope(self) -> float:
        if self.z_sup is not None:
            return self.z_sup
        probe = uniform_directions(np.random.default_rng(2024), 4096, self.body.dim)
        return 1.25 * float(self.marginal(probe).max())


def q_unit(K: ConvexBody, scale: float = 1.0) -> HyperplaneDensityQ:
    """q = scale * 1_{D_K}; scale = 1 gives the standard hyperplane law on K."""

    def evaluate(t, u):
        h = K.support(u)
        return np.where((t >= h * (1.0 - _EDGE)) & (t <= h + 1.0), scale, 0.0)

    def mass(u):
        return np.full(len(u), float(scale))

    def inverse(u, w):
        return K.support(u) + w

    return HyperplaneDensityQ(K, evaluate, "q-unit", {"scale": float(scale)}, sup_bound=float(scale),
                              direction_mass=mass, z_sup=float(scale), constant_marginal=True,
                              inverse_t=inverse)


def _power_tail_mass(h, p, beta):
    """int_h^{h+L} t^p max(0, 1 + beta (t - h)) dt with L = min(1, -1/beta)."""
    length = 1.0 if beta >= -1.0 else -1.0 / beta
    a, b = h, h + length
    i0 = (b ** (p + 1) - a ** (p + 1)) / (p + 1)
    i1 = (b ** (p + 2) - a ** (p + 2)) / (p + 2)
    return (1.0 - beta * h) * i0 + beta * i1


def q_power(K: ConvexBody, exponent: float | None = None, beta: float | None = None) -> HyperplaneDensityQ:
    """q(t, u) = t^p (1 + beta (t - h(K,u)))_+ on D_K, default p = (d^2 - 1)/2.

    On the inner boundary t = h(K,u) this equals h^p exactly, which is all
    the limit theorems see. The slope beta is solved so that the total mass
    is one; it tapers the density linearly across the strip and may cut it
    off before t = h + 1 when h^p is large.
    """
    d = K.dim
    p = (d * d - 1) / 2.0 if exponent is None else float(exponent)

    def total(b):
        res = integrate_sphere(lambda u: _power_tail_mass(K.support(u), p, b), d, rtol=1e-12)
        return res.value / omega(d)

    if beta is None:
        lo, hi = -1.0, 1.0
        while total(hi) < 1.0:
            hi *= 2.0
        while total(lo) > 1.0:
            lo *= 2.0
        beta = brentq(lambda b: total(b) - 1.0, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    beta = float(beta)
    hmax = K.circumradius()

    def evaluate(t, u):
        h = K.support(u)
        inside = (t >= h * (1.0 - _EDGE)) & (t <= h + 1.0)
        return np.where(inside, np.abs(t) ** p * np.maximum(0.0, 1.0 + beta * (t - h)), 0.0)

    def mass(u):
        return _power_tail_mass(K.support(u), p, beta)

    def antiderivative(t, h):
        return (1.0 - beta * h) * t ** (p + 1) / (p + 1) + beta * t ** (p + 2) / (p + 2)

    def inverse(u, w):
        h = K.support(u)
        length = 1.0 if beta >= -1.0 else -1.0 / beta
        target = antiderivative(h, h) + w * (antiderivative(h + length, h) - antiderivative(h, h))
        lo, hi = h.copy(), h + length
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = antiderivative(mid, h) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    sup = (hmax + 1.0) ** p * max(1.0, 1.0 + beta)
    # Z(u) increases with h(K,u), which is at most the circumradius
    z_sup = float(_power_tail_mass(np.array([hmax]), p, beta)[0])
    return HyperplaneDensityQ(K, evaluate, "q-power", {"exponent": p, "beta": beta}, sup_bound=sup,
                              direction_mass=mass, z_sup=z_sup, inverse_t=inverse)


def _sample_directions(q: HyperplaneDensityQ, m: int, rng, max_rejections: int) -> np.ndarray:
    d = q.body.dim
    if q.constant_marginal:
        return uniform_directions(rng, m, d)
    env = q.envelope()
    out = np.empty((m, d))
    filled = 0
    streak = 0
    while filled < m:
        need = m - filled
        batch = max(2 * need, 16)
        u = uniform_directions(rng, batch, d)
        w = rng.random(batch)
        acc = np.flatnonzero(w * env < q.marginal(u))
        if acc.size == 0:
            streak += batch
            if streak > max_rejections:
                raise SamplingError("direction marginal vanishes; check the hyperplane density")
            continue
        streak = batch - 1 - acc[-1]
        take = acc[:need]
        out[filled:filled + take.size] = u[take]
        filled += take.size
    return out


def _tabulated_t(q: HyperplaneDensityQ, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    h = q.body.support(u)
    s = np.linspace(0.0, 1.0, _TABLE_POINTS)
    t = h[:, None] + s[None, :]
    vals = q.evaluate(t.ravel(), np.repeat(u, _TABLE_POINTS, axis=0)).reshape(t.shape)
    cdf = np.concatenate([np.zeros((len(u), 1)), np.cumsum(0.5 * (vals[:, 1:] + vals[:, :-1]), axis=1)], axis=1)
    cdf /= cdf[:, -1:]
    rows = np.arange(len(u))
    j = np.clip((cdf < w[:, None]).sum(axis=1), 1, _TABLE_POINTS - 1)
    c0, c1 = cdf[rows, j - 1], cdf[rows, j]
    frac = np.where(c1 > c0, (w - c0) / np.where(c1 > c0, c1 - c0, 1.0), 0.0)
    return t[rows, j - 1] + frac * (t[rows, j] - t[rows, j - 1])


def sample_hyperplanes(K: ConvexBody, q: HyperplaneDensityQ, m: int, rng: np.random.Generator,
                       max_rejections: int = TOL.max_consecutive_rejections) -> tuple[np.ndarray, np.ndarray]:
    """m iid hyperplanes (u_i, t_i) from the law q(t, u) dt sigma(du)."""
    if q.body is not K and q.body.to_spec() != K.to_spec():
        raise ConfigError("hyperplane density was built for a different body")
    u = _sample_directions(q, m, rng, max_rejections)
    w = rng.random(m)
    t = q.inverse_t(u, w) if q.inverse_t is not None else _tabulated_t(q, u, w)
    return u, t


def sample_hyperplane(K: ConvexBody, q: HyperplaneDensityQ, rng: np.random.Generator):
    u, t = sample_hyperplanes(K, q, 1, rng)
    return u[0], float(t[0])


# ---------------------------------------------------------------------------
# checks


@dataclass
class QReport:
    q1: bool
    q2: bool
    q3: bool
    mass: float
    violations: list[str]

    @property
    def ok(self) -> bool:
        return self.q1 and self.q2 and self.q3


def validate_q(K: ConvexBody, q: HyperplaneDensityQ, probes: int = 1000, mass_tol: float = 1e-4,
               seed: int = 0) -> QReport:
    """Numerical check of support, boundary positivity and unit mass of q."""
    rng = np.random.default_rng(seed)
    d = K.dim
    u = uniform_directions(rng, probes, d)
    h = K.support(u)
    violations = []

    below = h * rng.random(probes)
    above = h + 1.0 + rng.random(probes) + 1e-9
    q1 = bool(np.all(q(below, u) == 0.0) and np.all(q(above, u) == 0.0))
    if not q1:
        violations.append("(q1) q is nonzero outside the strip D_K")

    eps = 1e-6
    v1 = q(h * (1.0 + eps), u)
    v2 = q(h * (1.0 + 2.0 * eps), u)
    q2 = bool(np.all(v1 > 0.0) and np.all(np.abs(v1 - v2) <= 1e-3 * np.maximum(np.abs(v1), 1e-300)))
    if not q2:
        violations.append("(q2) q is not positive and continuous near t = h(K,u)")

    res = integrate_sphere(q.marginal, d, rtol=1e-10)
    mass = res.value / omega(d)
    q3 = bool(abs(mass - 1.0) <= mass_tol)
    if not q3:
        violations.append(f"(q3) total mass {mass!r} differs from 1")
    return QReport(q1, q2, q3, mass, violations)


def normalization_check(rho: DensityRho, m: int = 200_000, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo value of int rho over its body with standard error."""
    K = rho.body
    lo, hi = K.bounding_box()
    rng = np.random.default_rng(seed)
    x = lo + (hi - lo) * rng.random((m, K.dim))
    vals = rho(x) * float(np.prod(hi - lo))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(m))


# ---------------------------------------------------------------------------
# names used in configuration files

POINT_DENSITIES = ("uniform", "polar-q")
HYPERPLANE_DENSITIES = ("q-unit", "q-power")


def hyperplane_density(K: ConvexBody, name: str, params: dict | None = None) -> HyperplaneDensityQ:
    params = dict(params or {})
    if name == "q-unit":
        return q_unit(K, **params)
    if name == "q-power":
        return q_power(K, **params)
    raise ConfigError(f"unknown hyperplane density {name!r}; expected one of {HYPERPLANE_DENSITIES}")


def point_density(K: ConvexBody, name: str, params: dict | None = None) -> DensityRho:
    """Point density by name. For "polar-q" the body K is the circumscribed
    body and the returned density lives on its polar."""
    params = dict(params or {})
    if name == "uniform":
        return uniform_density(K)
    if name == "polar-q":
        qname = params.pop("q", "q-unit")
        return polar_q_density(K, hyperplane_density(K, qname, params))
    raise ConfigError(f"unknown point density {name!r}; expected one of {POINT_DENSITIES}")
