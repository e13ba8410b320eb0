"""Central tolerance settings shared by every module."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    exact_rel: float = 1e-8        # identities between exact oracles
    fd_rel: float = 1e-5           # finite-difference paths
    orient_rel: float = 1e-10      # hull orientation predicates, times coordinate scale
    facet_merge: float = 1e-9      # coplanarity of adjacent simplicial facets
    origin_interior: float = 1e-12  # minimal support value accepted as "o interior"
    quad_rel: float = 1e-7         # quadrature refinement stopping rule
    quad_max_nodes: int = 2 ** 20
    fd_step: float = float(np.finfo(float).eps) ** 0.25
    fd_step_grad: float = float(np.finfo(float).eps) ** (1.0 / 3.0)
    max_consecutive_rejections: int = 10 ** 6


TOL = Tolerances()
