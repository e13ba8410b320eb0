"""Convex bodies as bundles of oracles: support, radial, membership, curvature.

Every oracle is vectorized over the leading axis: directions come in as an
(m, d) array (a single (d,) vector is also accepted) and results come back as
length-m arrays. The support function accepts arbitrary nonzero vectors and
is evaluated through its 1-homogeneous extension.
"""

from __future__ import annotations

import itertools
import json
import math
from functools import cached_property

import numpy as np
from scipy.optimize import minimize

from .config import TOL
from .errors import NonSmoothError, OriginNotInteriorError
from .hull import Polytope, convex_hull, mean_width as _polytope_mean_width, polar_polytope, volume as _polytope_volume
from .sphere import ball_volume, integrate_sphere, omega, tangent_bases


def _rows(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


class ConvexBody:
    kind = "generic"
    smooth = True

    def __init__(self, dim: int):
        if dim < 2:
            raise ValueError("dimension must be at least 2")
        self.dim = dim

    # -- oracles every body provides -------------------------------------
    def support(self, u) -> np.ndarray:
        raise NotImplementedError

    def radial(self, u) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError(f"{type(self).__name__} has no JSON form")

    # -- derived oracles with generic fallbacks ----------------------------
    def boundary_point(self, u) -> np.ndarray:
        """Gradient of the support function: the boundary point with outer normal u."""
        u = _rows(u)
        m, d = u.shape
        s = TOL.fd_step_grad
        eye = np.eye(d)
        plus = self.support((u[:, None, :] + s * eye[None]).reshape(-1, d)).reshape(m, d)
        minus = self.support((u[:, None, :] - s * eye[None]).reshape(-1, d)).reshape(m, d)
        return (plus - minus) / (2.0 * s)

    def rcurv_product(self, u) -> np.ndarray:
        """D_{d-1}h(u): product of the principal radii of curvature at normal u.

        Central second differences of h on the tangent plane u^perp; the
        determinant of that (d-1)x(d-1) Hessian is the product of radii.
        """
        u = _rows(u)
        return _fd_radii_product(self.support, u, TOL.fd_step)

    def curvature(self, u) -> np.ndarray:
        return 1.0 / self.rcurv_product(u)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        eye = np.eye(self.dim)
        return -self.support(-eye), self.support(eye)

    def circumradius(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))

    def distance(self, x) -> np.ndarray:
        """Euclidean distance to the body.

        Uses dist(x, K) = max over |v| <= 1 of <x, v> - h(K, v), which is a
        concave maximization.
        """
        x = _rows(x)
        out = np.zeros(len(x))
        inside = self.contains(x)
        for i in np.flatnonzero(~inside):
            xi = x[i]
            start = xi / np.linalg.norm(xi)
            res = minimize(
                lambda v: -(xi @ v - self.support(v)[0]) if np.any(v) else 0.0,
                start,
                method="SLSQP",
                constraints=[{"type": "ineq", "fun": lambda v: 1.0 - v @ v}],
                options={"ftol": 1e-14, "maxiter": 200},
            )
            out[i] = max(-res.fun, 0.0)
        return out

    def volume(self) -> float:
        # V = (1/d) int_S rho(u)^d du
        res = integrate_sphere(lambda u: self.radial(u) ** self.dim, self.dim)
        return res.value / self.dim

    def mean_width(self) -> float:
        res = integrate_sphere(self.support, self.dim)
        return 2.0 * res.value / omega(self.dim)

    def check_origin_interior(self, probes: int = 1000) -> None:
        from .rng import uniform_directions

        u = uniform_directions(np.random.default_rng(12345), probes, self.dim)
        u = np.vstack([u, np.eye(self.dim), -np.eye(self.dim)])
        if np.any(self.support(u) <= TOL.origin_interior):
            raise OriginNotInteriorError(f"origin is not interior to {self!r}")

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"


def _fd_radii_product(support, u: np.ndarray, s: float) -> np.ndarray:
    m, d = u.shape
    basis = tangent_bases(u)                      # (m, d-1, d)
    k = d - 1
    ii, jj = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    ei = basis[:, ii.ravel(), :]                  # (m, k*k, d)
    ej = basis[:, jj.ravel(), :]
    base = u[:, None, :]

    def h(shift):
        return support((base + s * shift).reshape(-1, d)).reshape(m, k * k)

    hess = (h(ei + ej) - h(ei - ej) - h(-ei + ej) + h(-ei - ej)) / (4.0 * s * s)
    hess = hess.reshape(m, k, k)
    hess = 0.5 * (hess + np.swapaxes(hess, 1, 2))
    return np.linalg.det(hess)


class Ball(ConvexBody):
    kind = "ball"

    def __init__(self, dim: int, radius: float = 1.0):
        super().__init__(dim)
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    def support(self, u):
        return self.radius * np.linalg.norm(_rows(u), axis=1)

    def radial(self, u):
        return self.radius / np.linalg.norm(_rows(u), axis=1)

    def contains(self, x, tol=1e-12):
        return np.linalg.norm(_rows(x), axis=1) <= self.radius * (1.0 + tol)

    def boundary_point(self, u):
        u = _rows(u)
        return self.radius * u / np.linalg.norm(u, axis=1, keepdims=True)

    def rcurv_product(self, u):
        return np.full(len(_rows(u)), self.radius ** (self.dim - 1))

    def curvature(self, u):
        return np.full(len(_rows(u)), self.radius ** (1 - self.dim))

    def distance(self, x):
        return np.maximum(np.linalg.norm(_rows(x), axis=1) - self.radius, 0.0)

    def bounding_box(self):
        return np.full(self.dim, -self.radius), np.full(self.dim, self.radius)

    def circumradius(self):
        return self.radius

    def volume(self):
        return ball_volume(self.dim) * self.radius ** self.dim

    def mean_width(self):
        return 2.0 * self.radius

    def parametrize(self, theta):
        """Boundary curve position, first and second derivative (d = 2)."""
        return Ellipsoid([self.radius, self.radius]).parametrize(theta)

    def to_spec(self):
        return {"kind": "ball", "dim": self.dim, "params": {"radius": self.radius}}

    def __repr__(self):
        return f"Ball(dim={self.dim}, radius={self.radius!r})"


class Ellipsoid(ConvexBody):
    """Axis-aligned ellipsoid sum(x_i^2 / a_i^2) <= 1."""

    kind = "ellipsoid"

    def __init__(self, semi_axes):
        a = np.asarray(semi_axes, dtype=float)
        super().__init__(len(a))
        if np.any(a <= 0):
            raise ValueError("semi-axes must be positive")
        self.semi_axes = a

    def support(self, u):
        return np.linalg.norm(_rows(u) * self.semi_axes, axis=1)

    def radial(self, u):
        return 1.0 / np.linalg.norm(_rows(u) / self.semi_axes, axis=1)

    def contains(self, x, tol=1e-12):
        return np.sum((_rows(x) / self.semi_axes) ** 2, axis=1) <= 1.0 + tol

    def boundary_point(self, u):
        u = _rows(u)
        return u * self.semi_axes ** 2 / self.support(u)[:, None]

    def rcurv_product(self, u):
        u = _rows(u)
        u = u / np.linalg.norm(u, axis=1, keepdims=True)
        return np.prod(self.semi_axes ** 2) / self.support(u) ** (self.dim + 1)

    def curvature(self, u):
        return 1.0 / self.rcurv_product(u)

    def distance(self, x):
        x = _rows(x)
        a2 = self.semi_axes ** 2
        out = np.zeros(len(x))
        outside = ~self.contains(x, tol=0.0)
        if np.any(outside):
            xo = x[outside]
            lam = np.zeros(len(xo))
            # g(lam) = sum a^2 x^2 / (a^2 + lam)^2 - 1 is convex decreasing: Newton from the left
            for _ in range(200):
                w = a2 + lam[:, None]
                g = np.sum(a2 * xo ** 2 / w ** 2, axis=1) - 1.0
                dg = -2.0 * np.sum(a2 * xo ** 2 / w ** 3, axis=1)
                step = g / dg
                lam = lam - step
                if np.all(np.abs(step) <= 1e-15 * (1.0 + lam)):
                    break
            y = a2 * xo / (a2 + lam[:, None])
            out[outside] = np.linalg.norm(xo - y, axis=1)
        return out

    def bounding_box(self):
        return -self.semi_axes.copy(), self.semi_axes.copy()

    def circumradius(self):
        return float(self.semi_axes.max())

    def volume(self):
        return ball_volume(self.dim) * float(np.prod(self.semi_axes))

    def parametrize(self, theta):
        if self.dim != 2:
            raise ValueError("parametrization only for d = 2")
        a, b = self.semi_axes
        c, s = np.cos(theta), np.sin(theta)
        x = np.column_stack([a * c, b * s])
        dx = np.column_stack([-a * s, b * c])
        ddx = np.column_stack([-a * c, -b * s])
        return x, dx, ddx

    def to_spec(self):
        return {"kind": "ellipsoid", "dim": self.dim, "params": {"semi_axes": self.semi_axes.tolist()}}

    def __repr__(self):
        return f"Ellipsoid({self.semi_axes.tolist()!r})"


class PolytopeBody(ConvexBody):
    """A bounded polytope with the origin in its interior, seen as a body."""

    kind = "polytope"
    smooth = False

    def __init__(self, polytope: Polytope, kind: str = "polytope", params: dict | None = None, box=None):
        super().__init__(polytope.dim)
        if np.any(polytope.offsets <= TOL.origin_interior):
            raise OriginNotInteriorError("polytope must contain the origin in its interior")
        self.polytope = polytope
        self.kind = kind
        self.params = dict(params or {})
        self._box = box

    def support(self, u):
        return np.max(_rows(u) @ self.polytope.vertices.T, axis=1)

    def radial(self, u):
        P = self.polytope
        return 1.0 / np.max(_rows(u) @ (P.normals / P.offsets[:, None]).T, axis=1)

    def contains(self, x, tol=1e-12):
        P = self.polytope
        return np.all(_rows(x) @ P.normals.T <= P.offsets * (1.0 + tol), axis=1)

    def boundary_point(self, u):
        idx = np.argmax(_rows(u) @ self.polytope.vertices.T, axis=1)
        return self.polytope.vertices[idx]

    def rcurv_product(self, u):
        # h is piecewise linear; its Hessian vanishes off a null set
        return np.zeros(len(_rows(u)))

    def curvature(self, u):
        u = _rows(u)
        u = u / np.linalg.norm(u, axis=1, keepdims=True)
        facet = np.max(u @ self.polytope.normals.T, axis=1) >= 1.0 - TOL.exact_rel
        if not np.all(facet):
            raise NonSmoothError("normal is not a facet normal (edge or vertex of a polytope)")
        return np.zeros(len(u))

    def distance(self, x):
        if self._box is not None:
            lo, hi = self._box
            x = _rows(x)
            return np.linalg.norm(x - np.clip(x, lo, hi), axis=1)
        return super().distance(x)

    def bounding_box(self):
        v = self.polytope.vertices
        return v.min(axis=0), v.max(axis=0)

    def circumradius(self):
        return float(np.linalg.norm(self.polytope.vertices, axis=1).max())

    def volume(self):
        return _polytope_volume(self.polytope)

    def mean_width(self):
        return _polytope_mean_width(self.polytope)

    def to_spec(self):
        spec = {"kind": self.kind, "dim": self.dim, "params": dict(self.params)}
        if self.kind == "polytope":
            spec["vertices"] = self.polytope.vertices.tolist()
        return spec

    def __repr__(self):
        return f"PolytopeBody(kind={self.kind!r}, dim={self.dim}, f0={self.polytope.f0})"


class PolarBody(ConvexBody):
    """Polar of a generic body: h(K*, u) = 1/rho(K, u), rho(K*, u) = 1/h(K, u)."""

    def __init__(self, base: ConvexBody):
        super().__init__(base.dim)
        self.base = base
        self.smooth = base.smooth

    def support(self, u):
        u = _rows(u)
        r = np.linalg.norm(u, axis=1)
        return r / self.base.radial(u / r[:, None])

    def radial(self, u):
        u = _rows(u)
        return 1.0 / self.base.support(u / np.linalg.norm(u, axis=1, keepdims=True))

    def contains(self, x, tol=1e-12):
        x = _rows(x)
        r = np.linalg.norm(x, axis=1)
        ok = r == 0
        nz = ~ok
        ok[nz] = self.base.support(x[nz]) <= 1.0 + tol
        return ok

    def to_spec(self):
        return {"kind": "polar", "dim": self.dim, "params": {"base": self.base.to_spec()}}

    def __repr__(self):
        return f"PolarBody({self.base!r})"


class ParallelBody(ConvexBody):
    """K + B^d."""

    def __init__(self, base: ConvexBody):
        super().__init__(base.dim)
        self.base = base

    def support(self, u):
        u = _rows(u)
        return self.base.support(u) + np.linalg.norm(u, axis=1)

    def contains(self, x, tol=1e-12):
        return self.base.distance(x) <= 1.0 + tol

    def radial(self, u):
        u = _rows(u)
        u = u / np.linalg.norm(u, axis=1, keepdims=True)
        # (rho_K + 1) u lies in K + B, and the radial function never exceeds h(K + B, u)
        lo = self.base.radial(u) + 1.0
        hi = self.support(u)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            inside = self.contains(mid[:, None] * u, tol=0.0)
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return 0.5 * (lo + hi)

    def distance(self, x):
        return np.maximum(self.base.distance(x) - 1.0, 0.0)

    def mean_width(self):
        return self.base.mean_width() + 2.0

    def to_spec(self):
        return {"kind": "parallel", "dim": self.dim, "params": {"base": self.base.to_spec()}}

    def __repr__(self):
        return f"ParallelBody({self.base!r})"


# ---------------------------------------------------------------------------
# zoo


def ball(dim: int, radius: float = 1.0) -> Ball:
    return Ball(dim, radius)


def ellipsoid(semi_axes) -> Ellipsoid:
    return Ellipsoid(semi_axes)


def cube(dim: int, side: float = 2.0) -> PolytopeBody:
    half = side / 2.0
    verts = np.array(list(itertools.product([-half, half], repeat=dim)), dtype=float)
    P = convex_hull(verts)
    return PolytopeBody(P, kind="cube", params={"side": float(side)},
                        box=(np.full(dim, -half), np.full(dim, half)))


def regular_simplex(dim: int, circumradius: float = 1.0) -> PolytopeBody:
    """Regular simplex centred at the origin with the given circumradius."""
    e = np.eye(dim + 1) - 1.0 / (dim + 1)
    # orthonormal basis of the hyperplane sum(x) = 0 in R^{d+1}
    q, _ = np.linalg.qr(np.vstack([np.ones(dim + 1), np.eye(dim + 1)[:dim]]).T)
    coords = e @ q[:, 1:dim + 1]
    coords *= circumradius / np.linalg.norm(coords[0])
    return PolytopeBody(convex_hull(coords), kind="simplex", params={"circumradius": float(circumradius)})


def polytope_body(vertices) -> PolytopeBody:
    return PolytopeBody(convex_hull(np.asarray(vertices, dtype=float)), kind="polytope")


def polar_body(K: ConvexBody) -> ConvexBody:
    """Polar body; closed forms for balls, ellipsoids and polytopes."""
    K.check_origin_interior()
    if isinstance(K, Ball):
        return Ball(K.dim, 1.0 / K.radius)
    if isinstance(K, Ellipsoid):
        return Ellipsoid(1.0 / K.semi_axes)
    if isinstance(K, PolytopeBody):
        return PolytopeBody(polar_polytope(K.polytope), kind="polytope")
    if isinstance(K, PolarBody):
        return K.base
    return PolarBody(K)


def parallel_body(K: ConvexBody) -> ConvexBody:
    """K_1 = K + B^d."""
    if isinstance(K, Ball):
        return Ball(K.dim, K.radius + 1.0)
    return ParallelBody(K)


def curvature_at(K: ConvexBody, u) -> np.ndarray:
    """Generalized Gauss curvature at the boundary point with outer normal u.

    Analytic where the body supplies it, 1 / D_{d-1}h(u) by finite
    differences otherwise; polytopes give 0 at facet normals and raise
    NonSmoothError elsewhere.
    """
    u = _rows(u)
    u = u / np.linalg.norm(u, axis=1, keepdims=True)
    return K.curvature(u)


# ---------------------------------------------------------------------------
# JSON descriptions

_KINDS = ("ball", "ellipsoid", "cube", "simplex", "polytope")


def body_from_spec(spec) -> ConvexBody:
    """Build a body from ``{"kind", "dim", "params", "vertices"}`` (dict or JSON text)."""
    if isinstance(spec, str):
        spec = json.loads(spec)
    kind = spec.get("kind")
    params = spec.get("params") or {}
    dim = spec.get("dim")
    if kind == "ball":
        return Ball(int(dim), float(params.get("radius", 1.0)))
    if kind == "ellipsoid":
        axes = params["semi_axes"]
        if dim is not None and len(axes) != dim:
            raise ValueError("semi_axes length does not match dim")
        return Ellipsoid(axes)
    if kind == "cube":
        return cube(int(dim), float(params.get("side", 2.0)))
    if kind == "simplex":
        return regular_simplex(int(dim), float(params.get("circumradius", 1.0)))
    if kind == "polytope":
        verts = np.asarray(spec["vertices"], dtype=float)
        if dim is not None and verts.shape[1] != dim:
            raise ValueError("vertex dimension does not match dim")
        return polytope_body(verts)
    if kind == "polar":
        return polar_body(body_from_spec(params["base"]))
    if kind == "parallel":
        return parallel_body(body_from_spec(params["base"]))
    raise ValueError(f"unknown body kind {kind!r}; expected one of {_KINDS}")


def body_to_json(K: ConvexBody) -> str:
    return json.dumps(K.to_spec(), sort_keys=True)


def body_label(K: ConvexBody) -> str:
    """Short identifier used in result tables."""
    if isinstance(K, Ball):
        return f"ball{K.dim}" if K.radius == 1.0 else f"ball{K.dim}(r={K.radius!r})"
    if isinstance(K, Ellipsoid):
        return "ellipsoid(" + ",".join(repr(float(a)) for a in K.semi_axes) + ")"
    if isinstance(K, PolytopeBody):
        if K.kind == "cube":
            return f"cube{K.dim}"
        if K.kind == "simplex":
            return f"simplex{K.dim}"
        return f"polytope{K.dim}(f0={K.polytope.f0})"
    return repr(K)


def zoo(dims=(2, 3)) -> dict[str, ConvexBody]:
    """Standard test bodies, keyed by label."""
    out: dict[str, ConvexBody] = {}
    for d in dims:
        out[f"ball{d}"] = Ball(d)
        out[f"ball{d}(r=2)"] = Ball(d, 2.0)
        axes = [2.0, 1.0] if d == 2 else [2.0, 1.0, 0.5][:d] + [1.5] * max(0, d - 3)
        out[f"ellipsoid{d}"] = Ellipsoid(axes)
        out[f"cube{d}"] = cube(d)
        out[f"simplex{d}"] = regular_simplex(d)
    return out
