"""Quadrature on the unit sphere S^{d-1}.

d = 2 uses the trapezoid rule on the circle (spectrally accurate for smooth
periodic integrands), d = 3 a recursively subdivided icosahedron with exact
spherical-triangle areas plus Richardson extrapolation between levels, and
d >= 4 randomized quasi-Monte Carlo with a replication standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.stats import norm, qmc

from .config import TOL

SphereFunction = Callable[[np.ndarray], np.ndarray]


def omega(d: int) -> float:
    """Surface area of S^{d-1}."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def ball_volume(d: int) -> float:
    """Volume of the unit ball B^d."""
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    nodes: int


def circle_rule(m: int) -> tuple[np.ndarray, np.ndarray]:
    theta = 2.0 * math.pi * np.arange(m) / m
    u = np.column_stack([np.cos(theta), np.sin(theta)])
    return u, np.full(m, 2.0 * math.pi / m)


_ICOSA_PHI = (1.0 + math.sqrt(5.0)) / 2.0
_ICOSA_VERTS = np.array(
    [
        [-1, _ICOSA_PHI, 0], [1, _ICOSA_PHI, 0], [-1, -_ICOSA_PHI, 0], [1, -_ICOSA_PHI, 0],
        [0, -1, _ICOSA_PHI], [0, 1, _ICOSA_PHI], [0, -1, -_ICOSA_PHI], [0, 1, -_ICOSA_PHI],
        [_ICOSA_PHI, 0, -1], [_ICOSA_PHI, 0, 1], [-_ICOSA_PHI, 0, -1], [-_ICOSA_PHI, 0, 1],
    ],
    dtype=float,
)
_ICOSA_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
)


def _normalize(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


@lru_cache(maxsize=None)
def _icosphere_triangles(level: int) -> np.ndarray:
    if level == 0:
        v = _normalize(_ICOSA_VERTS)
        return v[_ICOSA_FACES]
    tri = _icosphere_triangles(level - 1)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab, bc, ca = _normalize(a + b), _normalize(b + c), _normalize(c + a)
    out = np.stack(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ],
        axis=1,
    )
    out = out.reshape(-1, 3, 3)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def icosphere_rule(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Centroid nodes and exact spherical-triangle areas at a subdivision level."""
    tri = _icosphere_triangles(level)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    # Van Oosterom-Strackee solid angle
    num = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c)))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    area = 2.0 * np.arctan2(num, den)
    nodes = _normalize(a + b + c)
    nodes.setflags(write=False)
    area.setflags(write=False)
    return nodes, area


def _converged(new: float, old: float, rtol: float) -> bool:
    return abs(new - old) <= rtol * max(abs(new), 1e-300) or new == old


def integrate_sphere(
    f: SphereFunction,
    d: int,
    rtol: float = TOL.quad_rel,
    max_nodes: int = TOL.quad_max_nodes,
    seed: int = 0,
) -> QuadResult:
    """Integrate ``f`` over S^{d-1} against the Hausdorff measure.

    ``f`` must accept an (m, d) array of unit vectors and return m values.
    Resolution doubles (d = 2) or quadruples (d = 3) until successive
    estimates agree to ``rtol`` or the node budget is reached; the returned
    error is the last successive difference in either case.
    """
    if d == 2:
        m = 2 ** 11
        u, w = circle_rule(m)
        prev = float(np.dot(w, f(u)))
        m *= 2
        while True:
            u, w = circle_rule(m)
            cur = float(np.dot(w, f(u)))
            if _converged(cur, prev, rtol) or 2 * m > max_nodes:
                return QuadResult(cur, abs(cur - prev), m)
            prev, m = cur, 2 * m
    if d == 3:
        level = 2
        nodes, area = icosphere_rule(level)
        raw_prev = float(np.dot(area, f(nodes)))
        rich_prev = None
        while True:
            level += 1
            nodes, area = icosphere_rule(level)
            raw = float(np.dot(area, f(nodes)))
            rich = (4.0 * raw - raw_prev) / 3.0
            next_nodes = 20 * 4 ** (level + 1)
            if rich_prev is not None and (_converged(rich, rich_prev, rtol) or next_nodes > max_nodes):
                return QuadResult(rich, abs(rich - rich_prev), len(nodes))
            raw_prev, rich_prev = raw, rich
    return qmc_sphere(f, d, seed=seed)


def qmc_sphere(
    f: SphereFunction, d: int, m_log2: int = 13, scrambles: int = 16, seed: int = 0
) -> QuadResult:
    """Randomized QMC estimate of the sphere integral with a standard error."""
    estimates = np.empty(scrambles)
    for i in range(scrambles):
        sob = qmc.Sobol(d, scramble=True, seed=np.random.default_rng([seed, i]))
        z = norm.ppf(np.clip(sob.random_base2(m_log2), 1e-16, 1 - 1e-16))
        u = _normalize(z)
        estimates[i] = float(np.mean(f(u)))
    scale = omega(d)
    se = scale * float(np.std(estimates, ddof=1)) / math.sqrt(scrambles)
    return QuadResult(scale * float(np.mean(estimates)), se, scrambles * 2 ** m_log2)


def tangent_bases(u: np.ndarray) -> np.ndarray:
    """Orthonormal bases of the tangent spaces u^perp, shape (m, d-1, d).

    Built from the Householder reflection that maps e_1 to -sign(u_1) u.
    """
    u = np.atleast_2d(u)
    m, d = u.shape
    s = np.where(u[:, 0] >= 0.0, 1.0, -1.0)
    v = u.copy()
    v[:, 0] += s
    vv = np.einsum("ij,ij->i", v, v)
    h = np.eye(d)[None, :, :] - 2.0 * v[:, :, None] * v[:, None, :] / vv[:, None, None]
    # rows 1..d-1 of the symmetric reflection are orthogonal to u
    return h[:, 1:, :]
