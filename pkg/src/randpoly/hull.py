"""Convex hulls, polytope polarity, halfspace intersection and polytope functionals.

The reference hull is an incremental beneath-beyond construction on a
simplicial boundary; coplanar simplices are merged afterwards and the vertex
list is reduced to genuine extreme points. Qhull (via scipy) is available as
an interchangeable backend for throughput.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, QhullError

from .config import TOL
from .errors import DegenerateHullError, OriginNotInteriorError, UnboundedError
from .sphere import ball_volume, omega, qmc_sphere, tangent_bases

MAX_DIM = 6


@dataclass(frozen=True, eq=False)
class Polytope:
    """Bounded convex polytope with matching V- and H-descriptions.

    ``normals[j] . x <= offsets[j]`` are the facet inequalities (unit outer
    normals, ``offsets[j] = h(P, normals[j])``) and ``incidence[j]`` lists the
    rows of ``vertices`` lying on facet j. ``vertex_ids`` maps vertices back to
    the input points when the polytope came from a hull computation.
    """

    vertices: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    incidence: tuple[tuple[int, ...], ...]
    vertex_ids: tuple[int, ...] | None = None
    bounded: bool = True
    _edges: list = field(default_factory=list, repr=False)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def f0(self) -> int:
        return len(self.vertices)

    @property
    def n_facets(self) -> int:
        return len(self.offsets)

    @property
    def scale(self) -> float:
        return max(float(np.abs(self.vertices).max()), 1e-300)

    def edges(self) -> list[tuple[int, int, int, int]]:
        """Edges of a 3-polytope as ``(v1, v2, facet1, facet2)``."""
        if self.dim != 3:
            raise ValueError("edges() is implemented for d = 3 only")
        if not self._edges:
            owners: dict[tuple[int, int], list[int]] = {}
            for j, inc in enumerate(self.incidence):
                for pair in combinations(sorted(inc), 2):
                    owners.setdefault(pair, []).append(j)
            self._edges.extend(
                (a, b, fs[0], fs[1]) for (a, b), fs in sorted(owners.items()) if len(fs) >= 2
            )
        return self._edges

    def f_vector(self) -> tuple[int, ...]:
        if self.dim == 2:
            return (self.f0, self.n_facets)
        if self.dim == 3:
            return (self.f0, len(self.edges()), self.n_facets)
        raise ValueError("full f-vector only for d <= 3")

    def support(self, u: np.ndarray) -> np.ndarray:
        return np.max(np.atleast_2d(u) @ self.vertices.T, axis=1)

    def contains(self, x: np.ndarray, tol: float | None = None) -> np.ndarray:
        if tol is None:
            tol = TOL.orient_rel * self.scale
        x = np.atleast_2d(x)
        return np.all(x @ self.normals.T <= self.offsets + tol, axis=1)

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "vertices": self.vertices.tolist(),
            "facets": [
                {"normal": a.tolist(), "offset": float(b)} for a, b in zip(self.normals, self.offsets)
            ],
            "incidence": [list(inc) for inc in self.incidence],
            "vertex_ids": None if self.vertex_ids is None else list(self.vertex_ids),
        }

    def to_json(self) -> str:
        # repr-based float output is shortest round-trip, i.e. bit-faithful
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Polytope":
        return cls(
            vertices=np.array(data["vertices"], dtype=float),
            normals=np.array([f["normal"] for f in data["facets"]], dtype=float),
            offsets=np.array([f["offset"] for f in data["facets"]], dtype=float),
            incidence=tuple(tuple(inc) for inc in data["incidence"]),
            vertex_ids=None if data.get("vertex_ids") is None else tuple(data["vertex_ids"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "Polytope":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# hull construction


def _scale(points: np.ndarray) -> float:
    return max(float(np.abs(points).max()), 1e-300)


def _hyperplane(pts: np.ndarray) -> tuple[np.ndarray, float]:
    _, _, vt = np.linalg.svd(pts[1:] - pts[0])
    normal = vt[-1]
    return normal, float(normal @ pts[0])


def _initial_simplex(points: np.ndarray, tol: float) -> list[int]:
    n, d = points.shape
    first = int(np.argmin(points[:, 0]))
    chosen = [first]
    base = points[first]
    rel = points - base
    basis = np.zeros((0, d))
    for _ in range(d):
        resid = rel - (rel @ basis.T) @ basis
        norms = np.linalg.norm(resid, axis=1)
        j = int(np.argmax(norms))
        if norms[j] <= tol:
            raise DegenerateHullError(f"points span fewer than {d} dimensions")
        chosen.append(j)
        basis = np.vstack([basis, resid[j] / norms[j]])
    return chosen


def _beneath_beyond(points: np.ndarray, tol: float):
    n, d = points.shape
    init = _initial_simplex(points, tol)
    interior = points[init].mean(axis=0)
    facets: dict[int, tuple[tuple[int, ...], np.ndarray, float]] = {}
    counter = 0

    def add(verts: tuple[int, ...]) -> None:
        nonlocal counter
        normal, off = _hyperplane(points[list(verts)])
        if normal @ interior - off > 0:
            normal, off = -normal, -off
        facets[counter] = (verts, normal, off)
        counter += 1

    for k in range(d + 1):
        add(tuple(init[:k] + init[k + 1:]))

    seeded = set(init)
    for i in range(n):
        if i in seeded:
            continue
        ids = list(facets)
        normals = np.array([facets[f][1] for f in ids])
        offsets = np.array([facets[f][2] for f in ids])
        visible = normals @ points[i] - offsets > tol
        if not visible.any():
            continue
        ridges: Counter = Counter()
        for j in np.flatnonzero(visible):
            verts = facets[ids[j]][0]
            for k in range(d):
                ridges[tuple(sorted(verts[:k] + verts[k + 1:]))] += 1
            del facets[ids[j]]
        for ridge, c in ridges.items():
            if c == 1:
                add(ridge + (i,))

    simplices = np.array([facets[f][0] for f in facets], dtype=int)
    normals = np.array([facets[f][1] for f in facets])
    offsets = np.array([facets[f][2] for f in facets])
    return simplices, normals, offsets


def _qhull(points: np.ndarray):
    try:
        hull = ConvexHull(points)
    except QhullError as exc:
        raise DegenerateHullError(str(exc)) from exc
    eq = hull.equations
    return hull.simplices, eq[:, :-1], -eq[:, -1]


def _assemble(points, simplices, normals, offsets, tol) -> Polytope:
    d = points.shape[1]
    scale = _scale(points)
    nf = len(offsets)
    same = (normals @ normals.T >= 1.0 - TOL.facet_merge) & (
        np.abs(offsets[:, None] - offsets[None, :]) <= TOL.facet_merge * scale
    )
    n_groups, labels = connected_components(csr_matrix(same), directed=False)
    group_normals = np.zeros((n_groups, d))
    np.add.at(group_normals, labels, normals)
    group_normals /= np.linalg.norm(group_normals, axis=1, keepdims=True)
    members: list[set[int]] = [set() for _ in range(n_groups)]
    for j in range(nf):
        members[labels[j]].update(int(v) for v in simplices[j])

    candidates = sorted(set(int(v) for v in simplices.ravel()))
    genuine = set(candidates)
    if n_groups < nf:
        sizes = np.bincount(labels, minlength=n_groups)
        suspect = set()
        for g in np.flatnonzero(sizes > 1):
            suspect |= members[g]
        group_offsets = np.array(
            [max(group_normals[g] @ points[v] for v in members[g]) for g in range(n_groups)]
        )
        on_tol = max(tol, TOL.facet_merge * scale)
        for v in suspect:
            on = np.abs(group_normals @ points[v] - group_offsets) <= on_tol
            if np.linalg.matrix_rank(group_normals[on], tol=1e-9) < d:
                genuine.discard(v)

    vertex_ids = sorted(genuine)
    index_of = {v: k for k, v in enumerate(vertex_ids)}
    vertices = points[vertex_ids]
    facet_rows = []
    for g in range(n_groups):
        inc = sorted(index_of[v] for v in members[g] if v in genuine)
        a = group_normals[g]
        b = float(np.max(vertices[inc] @ a))
        facet_rows.append((a, b, tuple(inc)))
    order = np.lexsort(np.array([r[0] for r in facet_rows]).T[::-1])
    facet_rows = [facet_rows[k] for k in order]
    return Polytope(
        vertices=vertices,
        normals=np.array([r[0] for r in facet_rows]),
        offsets=np.array([r[1] for r in facet_rows]),
        incidence=tuple(r[2] for r in facet_rows),
        vertex_ids=tuple(vertex_ids),
    )


def convex_hull(points: Sequence, method: str = "beneath-beyond", tol: float | None = None) -> Polytope:
    """Minimal V/H description of the convex hull of ``points`` in R^d.

    ``method`` is ``"beneath-beyond"`` (reference implementation) or
    ``"qhull"``. Points within ``tol`` of a facet plane are treated as
    non-extreme. Raises DegenerateHullError when the points do not span R^d.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("points must be an (n, d) array")
    n, d = pts.shape
    if d < 1 or d > MAX_DIM:
        raise ValueError(f"dimension {d} outside 1..{MAX_DIM}")
    if n < d + 1:
        raise DegenerateHullError(f"need at least d+1 = {d + 1} points, got {n}")
    if tol is None:
        tol = TOL.orient_rel * _scale(pts)
    if d == 1:
        lo, hi = int(np.argmin(pts[:, 0])), int(np.argmax(pts[:, 0]))
        if pts[hi, 0] - pts[lo, 0] <= tol:
            raise DegenerateHullError("points coincide")
        return Polytope(
            vertices=pts[[lo, hi]],
            normals=np.array([[-1.0], [1.0]]),
            offsets=np.array([-pts[lo, 0], pts[hi, 0]]),
            incidence=((0,), (1,)),
            vertex_ids=(lo, hi),
        )
    if method == "beneath-beyond":
        simplices, normals, offsets = _beneath_beyond(pts, tol)
    elif method == "qhull":
        _initial_simplex(pts, tol)
        simplices, normals, offsets = _qhull(pts)
    else:
        raise ValueError(f"unknown hull method {method!r}")
    return _assemble(pts, simplices, normals, offsets, tol)


# ---------------------------------------------------------------------------
# polarity and halfspace intersection


def polar_polytope(P: Polytope, tol: float = TOL.origin_interior) -> Polytope:
    """Polar polytope; vertices a/b per facet and one facet per vertex of P."""
    if not P.bounded:
        raise UnboundedError("polar of an unbounded set is not a polytope here")
    if np.any(P.offsets <= tol * P.scale):
        raise OriginNotInteriorError("origin not interior: some facet offset <= tolerance")
    new_vertices = P.normals / P.offsets[:, None]
    norms = np.linalg.norm(P.vertices, axis=1)
    if np.any(norms <= tol * P.scale):
        raise OriginNotInteriorError("origin is a vertex")
    new_normals = P.vertices / norms[:, None]
    new_offsets = 1.0 / norms
    rows: list[list[int]] = [[] for _ in range(P.f0)]
    for j, inc in enumerate(P.incidence):
        for i in inc:
            rows[i].append(j)
    order = np.lexsort(new_normals.T[::-1])
    return Polytope(
        vertices=new_vertices,
        normals=new_normals[order],
        offsets=new_offsets[order],
        incidence=tuple(tuple(rows[i]) for i in order),
    )


@dataclass(frozen=True, eq=False)
class HalfspaceIntersection:
    """Result of intersecting halfspaces <u_i, x> <= t_i with t_i > 0.

    ``polytope`` is None when the intersection is unbounded; the dual hull of
    the points u_i / t_i is kept in either case (None if lower-dimensional).
    """

    dual_points: np.ndarray
    dual_hull: Polytope | None
    polytope: Polytope | None
    within_bound: bool | None = None

    @property
    def bounded(self) -> bool:
        return self.polytope is not None


def halfspace_intersection(normals, offsets, bound=None, method: str = "qhull") -> HalfspaceIntersection:
    u = np.atleast_2d(np.asarray(normals, dtype=float))
    t = np.atleast_1d(np.asarray(offsets, dtype=float))
    if np.any(t <= 0):
        raise ValueError("every hyperplane must miss the origin (t_i > 0)")
    dual = u / t[:, None]
    n, d = dual.shape
    if n < d + 1:
        return HalfspaceIntersection(dual, None, None)
    try:
        dual_hull = convex_hull(dual, method=method)
    except DegenerateHullError:
        return HalfspaceIntersection(dual, None, None)
    if np.any(dual_hull.offsets <= TOL.orient_rel * dual_hull.scale):
        return HalfspaceIntersection(dual, dual_hull, None)
    poly = polar_polytope(dual_hull)
    within = None
    if bound is not None:
        within = bool(np.all(bound.contains(poly.vertices)))
    return HalfspaceIntersection(dual, dual_hull, poly, within)


# ---------------------------------------------------------------------------
# functionals


def _simplex_volume(pts: np.ndarray) -> float:
    k = pts.shape[0] - 1
    return abs(float(np.linalg.det(pts[1:] - pts[0]))) / math.factorial(k)


def volume(P: Polytope) -> float:
    """Exact volume by a fan from the centroid over recursively measured facets."""
    if not P.bounded:
        raise UnboundedError("volume of an unbounded set")
    d = P.dim
    if d == 1:
        return float(P.vertices.max() - P.vertices.min())
    c = P.centroid
    total = 0.0
    for a, b, inc in zip(P.normals, P.offsets, P.incidence):
        total += (b - a @ c) * _facet_measure(P.vertices[list(inc)], a) / d
    return total


def _facet_measure(face: np.ndarray, normal: np.ndarray) -> float:
    d = len(normal)
    if d == 2:
        return float(np.linalg.norm(face[1] - face[0])) if len(face) == 2 else _extent(face)
    basis = tangent_bases(normal)[0]
    pts = (face - face[0]) @ basis.T
    if len(pts) == d:
        return _simplex_volume(pts)
    return volume(convex_hull(pts))


def _extent(pts: np.ndarray) -> float:
    centered = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    proj = centered @ vt[0]
    return float(proj.max() - proj.min())


def intrinsic_volume_1(obj) -> float:
    """First intrinsic volume of a polytope or of the hull of a point set.

    Lower-dimensional point sets are measured inside their affine hull, where
    V_1 takes the same value.
    """
    if isinstance(obj, Polytope):
        P = obj
    else:
        pts = np.atleast_2d(np.asarray(obj, dtype=float))
        centered = pts - pts.mean(axis=0)
        if len(pts) == 1 or np.abs(centered).max() == 0.0:
            return 0.0
        _, s, vt = np.linalg.svd(centered, full_matrices=False)
        rank = int(np.sum(s > TOL.orient_rel * max(s[0], 1e-300) * 10))
        if rank == 1:
            proj = centered @ vt[0]
            return float(proj.max() - proj.min())
        if rank < pts.shape[1]:
            return intrinsic_volume_1(centered @ vt[:rank].T)
        P = convex_hull(pts)
    d = P.dim
    if d == 1:
        return float(P.vertices.max() - P.vertices.min())
    if d == 2:
        return 0.5 * sum(_facet_measure(P.vertices[list(inc)], a) for a, inc in zip(P.normals, P.incidence))
    if d == 3:
        total = 0.0
        for v1, v2, f1, f2 in P.edges():
            length = float(np.linalg.norm(P.vertices[v1] - P.vertices[v2]))
            cosang = float(np.clip(P.normals[f1] @ P.normals[f2], -1.0, 1.0))
            total += length * math.acos(cosang)
        return total / (2.0 * math.pi)
    w = mean_width(P)
    return w * d * ball_volume(d) / (2.0 * ball_volume(d - 1))


def mean_width(obj, seed: int = 0) -> float:
    """Mean width normalized so that the unit ball has width 2.

    Accepts a Polytope, a ConvexBody (delegates to its own quadrature), or an
    (n, d) point array whose hull may be lower-dimensional.
    """
    if hasattr(obj, "support") and not isinstance(obj, Polytope):
        return obj.mean_width()
    if isinstance(obj, Polytope):
        d = obj.dim
        if not obj.bounded:
            raise UnboundedError("mean width of an unbounded set")
    else:
        obj = np.atleast_2d(np.asarray(obj, dtype=float))
        d = obj.shape[1]
    if d >= 4:
        verts = obj.vertices if isinstance(obj, Polytope) else obj
        res = qmc_sphere(lambda u: np.max(u @ verts.T, axis=1), d, seed=seed)
        return 2.0 * res.value / omega(d)
    # W(M) = 2 kappa_{d-1} / (d kappa_d) * V_1(M)
    return 2.0 * ball_volume(d - 1) / (d * ball_volume(d)) * intrinsic_volume_1(obj)


def contains_point(P: Polytope, x, tol: float | None = None):
    res = P.contains(np.asarray(x, dtype=float), tol)
    return bool(res[0]) if np.ndim(x) == 1 else res


# ---------------------------------------------------------------------------
# fast statistics for Monte-Carlo loops


def qhull_stats(points: np.ndarray) -> tuple[int, float]:
    """(f_0, volume) of conv(points) straight from Qhull; degenerate -> (n, 0)."""
    if len(points) <= points.shape[1]:
        return len(points), 0.0
    try:
        hull = ConvexHull(points)
    except QhullError:
        return len(points), 0.0
    return len(hull.vertices), float(hull.volume)


def planar_hull_batch(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vertex counts and areas of many planar hulls at once.

    ``points`` has shape (R, n, 2). A point is a hull vertex iff the
    directions to all other points leave an angular gap larger than pi.
    """
    pts = np.asarray(points, dtype=float)
    r, n, _ = pts.shape
    diff = pts[:, None, :, :] - pts[:, :, None, :]          # (R, n, n, 2): p_j - p_i
    ang = np.arctan2(diff[..., 1], diff[..., 0])
    eye = np.eye(n, dtype=bool)
    ang = np.where(eye[None], np.inf, ang)
    ang = np.sort(ang, axis=2)[:, :, : n - 1]
    gaps = np.diff(ang, axis=2)
    wrap = ang[:, :, 0] + 2.0 * math.pi - ang[:, :, -1]
    maxgap = np.maximum(gaps.max(axis=2, initial=0.0), wrap)
    is_vertex = maxgap > math.pi
    f0 = is_vertex.sum(axis=1)

    w = is_vertex.astype(float)
    center = (pts * w[..., None]).sum(axis=1) / np.maximum(f0, 1)[:, None]
    rel = pts - center[:, None, :]
    theta = np.where(is_vertex, np.arctan2(rel[..., 1], rel[..., 0]), np.inf)
    order = np.argsort(theta, axis=1)
    sorted_pts = np.take_along_axis(pts, order[..., None], axis=1)
    first = sorted_pts[:, :1, :]
    valid = np.arange(n)[None, :] < f0[:, None]
    ring = np.where(valid[..., None], sorted_pts, first)
    nxt = np.roll(ring, -1, axis=1)
    cross = ring[..., 0] * nxt[..., 1] - ring[..., 1] * nxt[..., 0]
    area = 0.5 * np.abs(cross.sum(axis=1))
    return f0, area
