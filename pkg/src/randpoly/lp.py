"""LP-based redundancy and boundedness tests for halfspace systems."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog


def nonredundant_halfspaces(normals, offsets, box: float | None = None, rtol: float = 1e-7) -> np.ndarray:
    """Mask of halfspaces <u_i, x> <= t_i that support a facet.

    Halfspace i is a facet iff dropping it strictly enlarges the
    intersection: the maximum of <u_i, x> over the remaining constraints,
    clipped to a large box, exceeds t_i.
    """
    u = np.atleast_2d(np.asarray(normals, dtype=float))
    t = np.asarray(offsets, dtype=float)
    n, d = u.shape
    if box is None:
        box = 1e3 * max(1.0, float(np.max(np.abs(t))))
    bounds = [(-box, box)] * d
    keep = np.zeros(n, dtype=bool)
    for i in range(n):
        others = np.arange(n) != i
        res = linprog(-u[i], A_ub=u[others], b_ub=t[others], bounds=bounds, method="highs")
        if res.status != 0:
            raise RuntimeError(f"LP failed for halfspace {i}: {res.message}")
        keep[i] = -res.fun > t[i] + rtol * max(1.0, abs(t[i]))
    return keep


def lp_facet_count(normals, offsets, **kw) -> int:
    return int(nonredundant_halfspaces(normals, offsets, **kw).sum())


def lp_is_bounded(normals, offsets) -> bool:
    """Bounded iff max <c, x> is finite for every c = +-e_k."""
    u = np.atleast_2d(np.asarray(normals, dtype=float))
    t = np.asarray(offsets, dtype=float)
    d = u.shape[1]
    for k in range(d):
        for sign in (1.0, -1.0):
            c = np.zeros(d)
            c[k] = -sign
            res = linprog(c, A_ub=u, b_ub=t, bounds=[(None, None)] * d, method="highs")
            if res.status == 3:
                return False
            if res.status != 0:
                raise RuntimeError(res.message)
    return True
