"""Right-hand sides of the limit theorems and the integral identities behind them.

Boundary integrals are evaluated on the sphere through the Gauss map: for a
body L with the origin inside,

    int_{bd L} g(x) kappa(x)^a dH(x) = int_S g(grad h(u)) D(u)^{1-a} du,

where D(u) is the product of principal radii of curvature at normal u. The
only boundary-side computation is the planar arc-length oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bodies import ConvexBody, PolytopeBody, body_label, polar_body
from .config import TOL
from .errors import ConfigError, NonSmoothError
from .samplers import DensityRho, HyperplaneDensityQ, uniform_density
from .sphere import ball_volume, integrate_sphere, omega

TAGS = ("mainmean", "extfacets", "weighted", "weightedcor", "gener1", "gener2", "omega_p", "cd")


@dataclass(frozen=True)
class TheoryValue:
    value: float
    source: str
    body: str
    error: float = 0.0
    analytic: bool = False

    def to_dict(self) -> dict:
        return {"value": self.value, "source": self.source, "body": self.body,
                "error": self.error, "analytic": self.analytic}


# ---------------------------------------------------------------------------
# the dimensional constant


def wieacker_constant(d: int) -> float:
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise ValueError("c_d needs an integer dimension d >= 2")
    d = int(d)
    alpha = ball_volume(d - 1)
    lead = (d * d + d + 2) * (d * d + 1) / (2.0 * (d + 3) * math.factorial(d + 1))
    return lead * math.gamma((d * d + 1) / (d + 1)) * ((d + 1) / alpha) ** (2.0 / (d + 1))


# ---------------------------------------------------------------------------
# sphere-side integrals

SphereIntegrand = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def sphere_integral(K: ConvexBody, integrand: SphereIntegrand, rtol: float = TOL.quad_rel):
    """int_S integrand(u, h(u), D(u), grad h(u)) du with the package quadrature."""

    def f(u):
        return integrand(u, K.support(u), K.rcurv_product(u), K.boundary_point(u))

    return integrate_sphere(f, K.dim, rtol=rtol)


def curvature_integral(K: ConvexBody, a: float, w: Callable | None = None):
    """int over the boundary of w(x, u) kappa(x)^a, returned as (value, error).

    ``w`` receives boundary points and their outer unit normals. Polytopes
    have kappa = 0 almost everywhere, so the integral vanishes for a > 0.
    """
    if isinstance(K, PolytopeBody) or not K.smooth:
        if a > 0:
            return 0.0, 0.0
        raise NonSmoothError("boundary integrals with a <= 0 are not available for polytopes")

    def integrand(u, h, D, x):
        vals = D ** (1.0 - a)
        return vals if w is None else w(x, u) * vals

    res = sphere_integral(K, integrand)
    return res.value, res.error


def boundary_curvature_integral_2d(K: ConvexBody, a: float, w: Callable | None = None, m: int = 2 ** 13) -> float:
    """Arc-length quadrature of w(x, u) kappa(x)^a over a planar smooth boundary.

    Needs ``K.parametrize(theta)`` returning positions and two derivatives of
    a counterclockwise periodic parametrization.
    """
    if K.dim != 2 or not hasattr(K, "parametrize"):
        raise ValueError("boundary-side oracle needs a parametrized planar body")
    theta = 2.0 * math.pi * np.arange(m) / m
    x, dx, ddx = K.parametrize(theta)
    speed = np.linalg.norm(dx, axis=1)
    kappa = np.abs(dx[:, 0] * ddx[:, 1] - dx[:, 1] * ddx[:, 0]) / speed ** 3
    normal = np.column_stack([dx[:, 1], -dx[:, 0]]) / speed[:, None]
    vals = kappa ** a
    if w is not None:
        vals = vals * w(x, normal)
    return float(np.sum(vals * speed) * 2.0 * math.pi / m)


def p_affine_surface_area(K: ConvexBody, p: float):
    """Omega_p(K): boundary integral of kappa^{p/(d+p)} / <x, u>^{(p-1)d/(d+p)}."""
    if p <= 0:
        raise ValueError("p must be positive")
    d = K.dim
    if isinstance(K, PolytopeBody) or not K.smooth:
        return 0.0, 0.0
    e_h = -(p - 1.0) * d / (d + p)
    e_d = d / (d + p)
    res = sphere_integral(K, lambda u, h, D, x: h ** e_h * D ** e_d)
    return res.value, res.error


@dataclass(frozen=True)
class IsoperimetricCheck:
    omega1: float
    bound: float
    equality: bool

    @property
    def holds(self) -> bool:
        return self.omega1 <= self.bound * (1.0 + 1e-7)


def equiaffine_isoperimetric(L: ConvexBody, rtol: float = 1e-6) -> IsoperimetricCheck:
    """Omega_1(L) versus d alpha_d^{2/(d+1)} V(L)^{(d-1)/(d+1)}; equality for ellipsoids."""
    d = L.dim
    om1, _ = p_affine_surface_area(L, 1.0)
    bound = d * ball_volume(d) ** (2.0 / (d + 1)) * L.volume() ** ((d - 1) / (d + 1))
    return IsoperimetricCheck(om1, bound, abs(om1 - bound) <= rtol * bound)


# ---------------------------------------------------------------------------
# the right-hand sides


def _q_on_boundary(q: HyperplaneDensityQ, K: ConvexBody):
    def at(u, h):
        return q(h, u)

    return at


def rhs_theorem(tag: str, K: ConvexBody, q: HyperplaneDensityQ | None = None, rho: DensityRho | None = None,
                lam=None, p: float | None = None) -> TheoryValue:
    """Limit constant of the theorem named by ``tag`` for the body K.

    mainmean / extfacets: uniform hyperplane law; gener1 / gener2: law with
    density q; weighted: inscribed density rho and weight lambda (defaults:
    uniform, 1); weightedcor: vertex count of the inscribed hull with density
    rho; omega_p: p-affine surface area; cd: the constant itself.
    """
    if tag not in TAGS:
        raise ConfigError(f"unknown theorem tag {tag!r}; expected one of {TAGS}")
    label = body_label(K)
    d = K.dim
    if tag == "cd":
        return TheoryValue(wieacker_constant(d), "cd", label, 0.0, True)
    if tag == "omega_p":
        if p is None:
            raise ConfigError("omega_p needs an exponent p")
        val, err = p_affine_surface_area(K, p)
        return TheoryValue(val, "omega_p", label, err)
    cd = wieacker_constant(d)
    om_factor = omega(d) ** (-(d - 1) / (d + 1))
    polytope = isinstance(K, PolytopeBody) or not K.smooth
    if tag in ("gener1", "gener2") and q is None:
        raise ConfigError(f"{tag} needs a hyperplane density q")
    if polytope:
        return TheoryValue(0.0, tag, label, 0.0, True)

    if tag in ("mainmean", "extfacets"):
        val, err = curvature_integral(K, d / (d + 1))
        factor = (2.0 if tag == "mainmean" else 1.0) * cd * om_factor
        return TheoryValue(factor * val, tag, label, factor * err)
    if tag in ("gener1", "gener2"):
        expo = -2.0 / (d + 1) if tag == "gener1" else (d - 1) / (d + 1)
        qb = _q_on_boundary(q, K)
        res = sphere_integral(K, lambda u, h, D, x: qb(u, h) ** expo * D ** (1.0 / (d + 1)))
        factor = (2.0 if tag == "gener1" else 1.0) * cd * om_factor
        return TheoryValue(factor * res.value, tag, label, factor * res.error)
    if rho is None:
        rho = uniform_density(K)
    if rho.name == "uniform":
        # constant on K; avoids membership rounding at quadrature points on the boundary
        level = rho.params["volume"] ** -1.0

        def rho(x):
            return np.full(len(x), level)
    if tag == "weighted":
        if lam is None:
            def lam(x):
                return np.ones(len(x))
        res = sphere_integral(
            K, lambda u, h, D, x: rho(x) ** (-2.0 / (d + 1)) * lam(x) * D ** (d / (d + 1)))
        return TheoryValue(cd * res.value, tag, label, cd * res.error)
    # weightedcor
    res = sphere_integral(K, lambda u, h, D, x: rho(x) ** ((d - 1) / (d + 1)) * D ** (d / (d + 1)))
    return TheoryValue(cd * res.value, tag, label, cd * res.error)


THEORY_TAG_FOR = {
    "facets-circumscribed": "gener2",
    "mean-width-gap": "gener1",
    "missed-weight": "weighted",
    "f0-inscribed": "weightedcor",
    "efron-lhs": "weightedcor",
    "efron-rhs": "weightedcor",
}


# ---------------------------------------------------------------------------
# identity checks


@dataclass(frozen=True)
class IdentityCheck:
    lhs: float
    rhs: float
    lhs_error: float = 0.0
    rhs_error: float = 0.0

    @property
    def abs_diff(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def rel_diff(self) -> float:
        return self.abs_diff / max(abs(self.rhs), 1e-300)


def trafo1_check(K: ConvexBody, g: Callable | None = None, a: float | None = None) -> IdentityCheck:
    """Sphere side versus planar arc length for int g kappa^a (default a = 1/(d+1))."""
    if a is None:
        a = 1.0 / (K.dim + 1)
    sphere, err = curvature_integral(K, a, g)
    boundary = boundary_curvature_integral_2d(K, a, g)
    return IdentityCheck(sphere, boundary, err, 0.0)


def trafo2_check(K: ConvexBody, f: Callable | None = None) -> IdentityCheck:
    """Both sides of the polar transform identity for f(t, u).

    Left: int over bd K* of f(1/|x|, x/|x|) |x|^{1-d} kappa*^{1/(d+1)}.
    Right: int over bd K of f(h(K, u), u) kappa^{d/(d+1)}, u the outer normal.
    """
    if isinstance(K, PolytopeBody) or not K.smooth:
        raise NonSmoothError("the polar transform identity is checked on smooth bodies only")
    d = K.dim
    if f is None:
        def f(t, u):
            return np.ones(len(t))
    Kp = polar_body(K)

    def left(u, h, D, x):
        r = np.linalg.norm(x, axis=1)
        return f(1.0 / r, x / r[:, None]) * r ** (1.0 - d) * D ** (d / (d + 1))

    def right(u, h, D, x):
        return f(h, u) * D ** (1.0 / (d + 1))

    lres = sphere_integral(Kp, left)
    rres = sphere_integral(K, right)
    return IdentityCheck(lres.value, rres.value, lres.error, rres.error)


def polar_affine_check(K: ConvexBody) -> IdentityCheck:
    """Omega_{d^2}(K) against Omega_1(K*)."""
    d = K.dim
    a, ea = p_affine_surface_area(K, float(d * d))
    b, eb = p_affine_surface_area(polar_body(K), 1.0)
    return IdentityCheck(a, b, ea, eb)


def shell_decomposition_check(K: ConvexBody, hfun: Callable | None = None, t0: float = 0.0, t1: float = 0.5,
                              m: int = 400_000, seed: int = 0, nt: int = 64) -> IdentityCheck:
    """Shell integral over (1-t0)K minus (1-t1)K, by Monte Carlo and by boundary quadrature.

    The boundary side is int_S h(u) D(u) int_{t0}^{t1} (1-t)^{d-1} hfun((1-t) grad h(u)) dt du,
    i.e. the coarea formula for (y, t) -> (1 - t) y with Jacobian (1-t)^{d-1} <y, u(y)>.
    """
    if not 0.0 <= t0 <= t1 < 1.0:
        raise ValueError("need 0 <= t0 <= t1 < 1")
    if isinstance(K, PolytopeBody) or not K.smooth:
        raise NonSmoothError("shell decomposition is checked on smooth bodies only")
    d = K.dim
    if hfun is None:
        def hfun(x):
            return np.ones(len(x))

    gx, gw = np.polynomial.legendre.leggauss(nt)
    ts = t0 + (t1 - t0) * 0.5 * (gx + 1.0)
    tw = (t1 - t0) * 0.5 * gw

    def integrand(u, h, D, x):
        acc = np.zeros(len(u))
        for t, w in zip(ts, tw):
            acc += w * (1.0 - t) ** (d - 1) * hfun((1.0 - t) * x)
        return h * D * acc

    res = sphere_integral(K, integrand)

    rng = np.random.default_rng(seed)
    lo, hi = K.bounding_box()
    x = lo + (hi - lo) * rng.random((m, d))
    outer = K.contains(x / (1.0 - t0))
    inner = K.contains(x / (1.0 - t1)) if t1 > 0 else np.zeros(m, dtype=bool)
    vals = np.where(outer & ~inner, hfun(x), 0.0) * float(np.prod(hi - lo))
    return IdentityCheck(float(vals.mean()), res.value, float(vals.std(ddof=1) / math.sqrt(m)), res.error)
