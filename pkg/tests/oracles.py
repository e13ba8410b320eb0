"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np


def brute_force_facets(points: np.ndarray, tol: float = 1e-9) -> set[frozenset[int]]:
    """Facets of conv(points) as sets of input indices lying on each facet plane.

    Tests the hyperplane through every d-subset; it supports a facet when all
    points lie weakly on one side. O(n^{d+1}), vectorized over the subsets.
    """
    n, d = points.shape
    combos = np.array(list(itertools.combinations(range(n), d)))
    base = points[combos[:, 0]]
    if d == 2:
        e = points[combos[:, 1]] - base
        normals = np.column_stack([-e[:, 1], e[:, 0]])
    else:
        normals = np.cross(points[combos[:, 1]] - base, points[combos[:, 2]] - base)
    norm = np.linalg.norm(normals, axis=1)
    keep = norm > 1e-14
    normals = normals[keep] / norm[keep, None]
    base = base[keep]
    s = points @ normals.T - np.einsum("ij,ij->i", base, normals)[None, :]
    support = np.all(s <= tol, axis=0) | np.all(s >= -tol, axis=0)
    on = np.abs(s) <= tol
    return {frozenset(np.flatnonzero(on[:, j]).tolist()) for j in np.flatnonzero(support)}


def gift_wrap(points: np.ndarray) -> list[int]:
    """Jarvis march; indices of the planar hull vertices in counterclockwise order."""
    n = len(points)
    start = int(np.lexsort((points[:, 1], points[:, 0]))[0])
    hull = [start]
    cur = start
    while True:
        vecs = points - points[cur]
        cand = (cur + 1) % n
        while True:
            a = vecs[cand]
            cross = a[0] * vecs[:, 1] - a[1] * vecs[:, 0]
            eps = 1e-13 * (a @ a)
            # a point to the right of cur -> cand, or collinear and farther, wins
            farther = (np.abs(cross) <= eps) & (np.einsum("ij,ij->i", vecs, vecs) > (a @ a) * (1 + 1e-12))
            better = np.flatnonzero((cross < -eps) | farther)
            if better.size == 0:
                break
            cand = int(better[np.argmin(cross[better])])
        cur = cand
        if cur == start:
            return hull
        hull.append(cur)


def shoelace(points: np.ndarray, order: list[int]) -> float:
    p = points[order]
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def barycentric_inside(simplex: np.ndarray, x: np.ndarray, tol: float = 0.0) -> np.ndarray:
    d = simplex.shape[1]
    T = (simplex[1:] - simplex[0]).T
    lam = np.linalg.solve(T, (x - simplex[0]).T).T
    full = np.column_stack([1.0 - lam.sum(axis=1), lam])
    return np.all(full >= -tol, axis=1)


def random_ball_points(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random((n, 1)) ** (1.0 / d)
