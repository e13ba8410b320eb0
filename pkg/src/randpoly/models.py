"""The inscribed and circumscribed random polytope models and their duality.

Inscribed: the convex hull of n iid points with density rho in K.
Circumscribed: the intersection of the n halfspaces <u_i, x> <= t_i bounded
by iid random hyperplanes that miss the interior of K. The map (u, t) -> u/t
turns every circumscribed sample into an inscribed sample of the polar body
with the induced density; the circumscribed set is the polar of that hull.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bodies import ConvexBody, body_label, parallel_body
from .errors import DegenerateHullError
from .hull import HalfspaceIntersection, Polytope, convex_hull, halfspace_intersection, volume
from .lp import lp_facet_count
from .rng import RngStream
from .samplers import (DensityRho, HyperplaneDensityQ, polar_q_density, sample_hyperplanes,
                       sample_points)


def _generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator(), rng
    return rng, None


def _stream_info(stream: RngStream | None) -> dict | None:
    if stream is None:
        return None
    return {"seed": stream.seed, "tag": stream.tag, "n": stream.n, "rep": stream.rep}


@dataclass(frozen=True, eq=False)
class InscribedSample:
    body: ConvexBody
    density: DensityRho
    n: int
    points: np.ndarray
    hull: Polytope | None
    stream: RngStream | None = None

    @property
    def lower_dimensional(self) -> bool:
        return self.hull is None

    @property
    def f0(self) -> int:
        # a lower-dimensional hull keeps every point (general position)
        return self.n if self.hull is None else self.hull.f0

    @property
    def volume(self) -> float:
        return 0.0 if self.hull is None else volume(self.hull)

    def repro(self) -> dict:
        return {"model": "inscribed", "stream": _stream_info(self.stream), "body": self.body.to_spec(),
                "density": self.density.name, "n": self.n}

    def to_json(self) -> str:
        return json.dumps(self.repro(), sort_keys=True)


def _hull_or_none(points: np.ndarray, method: str) -> Polytope | None:
    try:
        return convex_hull(points, method=method)
    except DegenerateHullError:
        return None


def draw_inscribed(K: ConvexBody, rho: DensityRho, n: int, rng, method: str = "qhull") -> InscribedSample:
    """n iid points of density rho in K and their convex hull."""
    if n < 1:
        raise ValueError("n must be at least 1")
    gen, stream = _generator(rng)
    pts = sample_points(K, rho, n, gen)
    return InscribedSample(K, rho, n, pts, _hull_or_none(pts, method), stream)


@dataclass(frozen=True, eq=False)
class CircumscribedSample:
    body: ConvexBody
    density: HyperplaneDensityQ
    n: int
    normals: np.ndarray
    offsets: np.ndarray
    intersection: HalfspaceIntersection
    stream: RngStream | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dual_points(self) -> np.ndarray:
        return self.intersection.dual_points

    @property
    def dual_hull(self) -> Polytope | None:
        return self.intersection.dual_hull

    @property
    def bounded(self) -> bool:
        return self.intersection.bounded

    @property
    def polytope(self) -> Polytope | None:
        return self.intersection.polytope

    @property
    def within_parallel_body(self) -> bool:
        """True iff the set is bounded and contained in K + B^d."""
        if "within" not in self._cache:
            if not self.bounded:
                self._cache["within"] = False
            else:
                K1 = parallel_body(self.body)
                self._cache["within"] = bool(np.all(K1.contains(self.polytope.vertices, tol=1e-12)))
        return self._cache["within"]

    def repro(self) -> dict:
        return {"model": "circumscribed", "stream": _stream_info(self.stream), "body": self.body.to_spec(),
                "density": self.density.name, "n": self.n}

    def to_json(self) -> str:
        return json.dumps(self.repro(), sort_keys=True)


def circumscribed_from_halfspaces(K: ConvexBody, q: HyperplaneDensityQ, normals, offsets,
                                  method: str = "qhull", stream: RngStream | None = None) -> CircumscribedSample:
    u = np.atleast_2d(np.asarray(normals, dtype=float))
    t = np.atleast_1d(np.asarray(offsets, dtype=float))
    inter = halfspace_intersection(u, t, method=method)
    return CircumscribedSample(K, q, len(t), u, t, inter, stream)


def draw_circumscribed(K: ConvexBody, q: HyperplaneDensityQ, n: int, rng, method: str = "qhull") -> CircumscribedSample:
    """n iid random halfspaces containing K and their intersection."""
    if n < 1:
        raise ValueError("n must be at least 1")
    gen, stream = _generator(rng)
    u, t = sample_hyperplanes(K, q, n, gen)
    return circumscribed_from_halfspaces(K, q, u, t, method=method, stream=stream)


def duality_bridge(sample: CircumscribedSample) -> InscribedSample:
    """The same randomness read as an inscribed sample of K* with the induced density."""
    rho = polar_q_density(sample.body, sample.density)
    pts = sample.dual_points
    hull = sample.dual_hull
    if hull is None and len(pts) > sample.body.dim:
        hull = _hull_or_none(pts, "qhull")
    return InscribedSample(rho.body, rho, sample.n, pts, hull, sample.stream)


def facet_count(sample: CircumscribedSample) -> int:
    """Number of facets of the circumscribed polyhedral set.

    Bounded: vertices of the dual hull. Unbounded: halfspaces that are not
    redundant, decided by one LP per halfspace.
    """
    if sample.bounded:
        return sample.dual_hull.f0
    if "lp_facets" not in sample._cache:
        sample._cache["lp_facets"] = lp_facet_count(sample.normals, sample.offsets)
    return sample._cache["lp_facets"]


def describe(sample) -> str:
    kind = "inscribed" if isinstance(sample, InscribedSample) else "circumscribed"
    return f"{kind} sample of {body_label(sample.body)}, n={sample.n}"
