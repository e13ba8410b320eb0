"""Counter-based random streams keyed by (seed, tag, n, replication).

Each stream is a Philox generator whose 128-bit key packs the master seed
and the stream coordinates, so a stream is fully determined by its key and
never depends on how replications are scheduled across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

_TAG_BITS = 16
_N_BITS = 24
_REP_BITS = 24

# stream tags used across the package
TAG_DEFAULT = 0
TAG_EFRON_LHS = 1
TAG_EFRON_RHS = 2
TAG_DUALITY_INSCRIBED = 3
TAG_MC_WEIGHT = 4
TAG_CHECKS = 5


def stream_key(seed: int, tag: int = 0, n: int = 0, rep: int = 0) -> np.ndarray:
    if not 0 <= tag < 2 ** _TAG_BITS:
        raise ValueError(f"tag {tag} out of range")
    if not 0 <= n < 2 ** _N_BITS:
        raise ValueError(f"n {n} out of range")
    if not 0 <= rep < 2 ** _REP_BITS:
        raise ValueError(f"replication {rep} out of range")
    packed = (tag << (_N_BITS + _REP_BITS)) | (n << _REP_BITS) | rep
    return np.array([seed % 2 ** 64, packed], dtype=np.uint64)


@dataclass(frozen=True)
class RngStream:
    seed: int
    tag: int = 0
    n: int = 0
    rep: int = 0

    def generator(self) -> np.random.Generator:
        key = stream_key(self.seed, self.tag, self.n, self.rep)
        return np.random.Generator(np.random.Philox(key=key))


def replication_generators(
    seed: int, tag: int, n: int, reps: range
) -> Iterator[tuple[int, np.random.Generator]]:
    """Yield ``(r, generator)`` for each replication index in ``reps``.

    One bit generator is re-keyed per replication, which is much cheaper than
    constructing a fresh Philox object; the draws are identical to
    ``RngStream(seed, tag, n, r).generator()``. The yielded generator is only
    valid until the next iteration.
    """
    bitgen = np.random.Philox(key=stream_key(seed, tag, n, 0))
    gen = np.random.Generator(bitgen)
    zero_counter = np.zeros(4, dtype=np.uint64)
    empty = np.zeros(4, dtype=np.uint64)
    for r in reps:
        bitgen.state = {
            "bit_generator": "Philox",
            "state": {"counter": zero_counter, "key": stream_key(seed, tag, n, r)},
            "buffer": empty,
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        yield r, gen


def uniform_directions(rng: np.random.Generator, m: int, d: int) -> np.ndarray:
    """m independent directions uniform on the unit sphere in R^d."""
    g = rng.standard_normal((m, d))
    norms = np.linalg.norm(g, axis=1)
    while np.any(norms == 0.0):  # pragma: no cover - probability zero
        bad = norms == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(g, axis=1)
    return g / norms[:, None]
