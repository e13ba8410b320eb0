"""Self-check suites run by ``randpoly check`` and by the acceptance tests."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .bodies import Ball, Ellipsoid, cube, polar_body, regular_simplex, zoo
from .functionals import Context, estimate_expectation
from .hull import convex_hull, polar_polytope
from .rng import TAG_DUALITY_INSCRIBED, uniform_directions
from .samplers import q_unit
from .sphere import ball_volume, omega
from .theory import (equiaffine_isoperimetric, p_affine_surface_area, polar_affine_check, rhs_theorem,
                     shell_decomposition_check, trafo1_check, trafo2_check, wieacker_constant)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} [{self.suite}] {self.name}: {self.detail}"


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def wieacker_constant_lgamma(d: int) -> float:
    """Second evaluation of c_d through log-gamma, for cross-checking."""
    log_alpha = 0.5 * (d - 1) * math.log(math.pi) - math.lgamma((d + 1) / 2)
    log_c = (math.log((d * d + d + 2) * (d * d + 1)) - math.log(2 * (d + 3)) - math.lgamma(d + 2)
             + math.lgamma((d * d + 1) / (d + 1)) + 2.0 / (d + 1) * (math.log(d + 1) - log_alpha))
    return math.exp(log_c)


# ---------------------------------------------------------------------------


def identities_suite() -> list[CheckResult]:
    out = []
    worst = max(_rel(wieacker_constant(d), wieacker_constant_lgamma(d)) for d in range(2, 7))
    out.append(CheckResult("identities", "c_d direct vs log-gamma, d=2..6", worst <= 1e-12, f"max rel {worst:.2e}"))

    worst_g1 = worst_g2 = worst_ratio = 0.0
    for K in zoo((2, 3)).values():
        q = q_unit(K)
        mm = rhs_theorem("mainmean", K).value
        ef = rhs_theorem("extfacets", K).value
        g1 = rhs_theorem("gener1", K, q=q).value
        g2 = rhs_theorem("gener2", K, q=q).value
        worst_g1 = max(worst_g1, abs(g1 - mm) / max(mm, 1.0))
        worst_g2 = max(worst_g2, abs(g2 - ef) / max(ef, 1.0))
        if ef > 0:
            worst_ratio = max(worst_ratio, abs(mm / ef - 2.0))
    out.append(CheckResult("identities", "gener1(q=1) = mainmean on the zoo", worst_g1 <= 1e-10, f"max dev {worst_g1:.2e}"))
    out.append(CheckResult("identities", "gener2(q=1) = extfacets on the zoo", worst_g2 <= 1e-10, f"max dev {worst_g2:.2e}"))
    out.append(CheckResult("identities", "mainmean / extfacets = 2", worst_ratio <= 1e-12, f"max dev {worst_ratio:.2e}"))

    rng = np.random.default_rng(7)
    worst_recip = 0.0
    for K in zoo((2, 3)).values():
        u = uniform_directions(rng, 1000, K.dim)
        Kp = polar_body(K)
        worst_recip = max(worst_recip, float(np.abs(Kp.support(u) * K.radial(u) - 1.0).max()))
    out.append(CheckResult("identities", "h(K*,u) rho(K,u) = 1 on the zoo", worst_recip <= 1e-10, f"max dev {worst_recip:.2e}"))

    bad_euler = 0
    worst_polar = 0.0
    for d in (2, 3):
        for _ in range(20):
            pts = rng.standard_normal((30, d))
            pts /= np.linalg.norm(pts, axis=1, keepdims=True)
            pts *= rng.random((30, 1)) ** (1 / d)
            P = convex_hull(pts)
            fv = P.f_vector()
            euler = fv[0] - fv[1] + (fv[2] if d == 3 else 0)
            bad_euler += euler != (2 if d == 3 else 0)
            if np.all(P.offsets > 0):
                PP = polar_polytope(polar_polytope(P))
                a = np.array(sorted(map(tuple, np.round(P.vertices, 12))))
                b = np.array(sorted(map(tuple, np.round(PP.vertices, 12))))
                worst_polar = max(worst_polar, float(np.abs(a - b).max()) if a.shape == b.shape else math.inf)
    out.append(CheckResult("identities", "Euler relation on random hulls", bad_euler == 0, f"{bad_euler} violations"))
    out.append(CheckResult("identities", "double polar returns the hull", worst_polar <= 1e-8, f"max dev {worst_polar:.2e}"))
    return out


def transforms_suite() -> list[CheckResult]:
    out = []
    E = Ellipsoid([2.0, 1.0])
    worst = max(trafo1_check(E, a=a).rel_diff for a in (1 / 3, 2 / 3, 1.0))
    out.append(CheckResult("transforms", "sphere side = arc length on ellipse (2,1)", worst <= 1e-6, f"max rel {worst:.2e}"))

    worst_two = worst_law = 0.0
    stated = []
    for d in (2, 3):
        for r in (0.5, 1.0, 2.0):
            c = trafo2_check(Ball(d, r))
            law = omega(d) * r ** ((d - 1) / (d + 1))
            worst_two = max(worst_two, c.rel_diff)
            worst_law = max(worst_law, _rel(c.lhs, law), _rel(c.rhs, law))
            stated.append(_rel(c.lhs, omega(d) * r ** (d * (d - 1) / (d + 1))))
    out.append(CheckResult("transforms", "polar transform on balls, two sides agree", worst_two <= 1e-10,
                           f"max rel {worst_two:.2e}"))
    out.append(CheckResult("transforms", "polar transform on balls = omega_d r^((d-1)/(d+1))", worst_law <= 1e-10,
                           f"max rel {worst_law:.2e}; alternative law omega_d r^(d(d-1)/(d+1)) off by up to {max(stated):.2f}"))
    c = trafo2_check(E, lambda t, u: t)
    out.append(CheckResult("transforms", "polar transform on ellipse (2,1), f = t", c.rel_diff <= 1e-4, f"rel {c.rel_diff:.2e}"))

    worst = max(polar_affine_check(K).rel_diff for K in (E, Ellipsoid([2.0, 1.0, 0.5])))
    out.append(CheckResult("transforms", "Omega_{d^2}(K) = Omega_1(K*) on ellipsoids d=2,3", worst <= 1e-4, f"max rel {worst:.2e}"))

    worst = 0.0
    for d in (2, 3):
        for p in (1.0, 2.0, float(d * d)):
            worst = max(worst, _rel(p_affine_surface_area(Ball(d), p)[0], omega(d)))
    out.append(CheckResult("transforms", "Omega_p(B^d) = omega_d for p in {1,2,d^2}", worst <= 1e-10, f"max rel {worst:.2e}"))

    iso = [equiaffine_isoperimetric(K) for K in (E, Ellipsoid([2.0, 1.0, 0.5]))]
    ok = all(i.equality and i.holds for i in iso)
    out.append(CheckResult("transforms", "equiaffine isoperimetric equality on ellipsoids", ok,
                           ", ".join(f"{i.omega1:.10g}/{i.bound:.10g}" for i in iso)))

    sh = shell_decomposition_check(Ball(2), None, 0.0, 0.5)
    exact = math.pi * 0.75
    ok = _rel(sh.rhs, exact) <= 1e-10 and abs(sh.lhs - sh.rhs) <= 4 * sh.lhs_error
    out.append(CheckResult("transforms", "shell decomposition on B^2", ok,
                           f"quadrature {sh.rhs:.12g} vs {exact:.12g}, MC {sh.lhs:.5g} +- {sh.lhs_error:.2g}"))
    return out


def efron_suite(R: int = 100_000, ns=(5, 20), seed: int = 20240601, workers: int = 1) -> list[CheckResult]:
    out = []
    bodies = {"triangle": regular_simplex(2), "ball2": Ball(2), "cube3": cube(3)}
    for label, K in bodies.items():
        ctx = Context(body=K.to_spec(), density="uniform")
        for n in ns:
            t0 = time.perf_counter()
            lhs = estimate_expectation("efron-lhs", ctx, n, R, seed=seed, workers=workers)
            rhs = estimate_expectation("efron-rhs", ctx, n, R, seed=seed, workers=workers)
            se = math.hypot(lhs.stderr, rhs.stderr)
            z = (lhs.estimate - rhs.estimate) / se
            out.append(CheckResult("efron", f"{label} n={n} R={R}", abs(z) <= 4.0,
                                   f"E f0 = {lhs.estimate:.5f} +- {lhs.stderr:.1e}, n E missed = {rhs.estimate:.5f} "
                                   f"+- {rhs.stderr:.1e}, z = {z:+.2f}", time.perf_counter() - t0))
    return out


def duality_values(d: int, n: int, R: int, seed: int, workers: int = 1):
    """Facet counts of circumscribed sets and vertex counts of independent polar hulls."""
    spec = Ball(d).to_spec()
    circ = Context(body=spec, density="q-unit")
    insc = Context(body=spec, density="polar-q", density_params={"q": "q-unit"})
    _, facets = estimate_expectation("facets-circumscribed", circ, n, R, seed=seed, workers=workers, return_values=True)
    _, verts = estimate_expectation("f0-inscribed", insc, n, R, seed=seed, workers=workers, return_values=True,
                                    tag=TAG_DUALITY_INSCRIBED)
    return facets, verts


def duality_suite(cases=((2, 50, 5000), (3, 40, 2000)), seed: int = 20240602, workers: int = 1) -> list[CheckResult]:
    out = []
    for d, n, R in cases:
        t0 = time.perf_counter()
        facets, verts = duality_values(d, n, R, seed, workers)
        ks = stats.ks_2samp(facets, verts)
        out.append(CheckResult("duality", f"B^{d} n={n} R={R} facets vs polar vertices", ks.pvalue > 0.01,
                               f"KS p = {ks.pvalue:.3f}, means {facets.mean():.3f} / {verts.mean():.3f}",
                               time.perf_counter() - t0))
    return out


SUITES = {
    "identities": identities_suite,
    "transforms": transforms_suite,
    "efron": efron_suite,
    "duality": duality_suite,
}
