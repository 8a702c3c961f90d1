"""Counter-based random streams with deterministic substream derivation.

Every stochastic routine in the package takes an :class:`RngStream`.  A
stream is a pure value (seed, stream_id); the generator it yields is a
Philox counter-based generator keyed on that pair, so identical streams
produce identical output regardless of process, thread, or call order.

Convention for carving up the 64-bit ``stream_id`` space:

* ``substream(i)`` advances the id by ``i`` -- used for replicate or
  chunk counters within one task (i < 2**32).
* ``lane(n)`` jumps by ``n * 2**32`` -- used to give distinct tasks of
  one run non-overlapping counter ranges.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
LANE_STRIDE = 1 << 32


@dataclass(frozen=True)
class RngStream:
    """Immutable handle for a reproducible random substream."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must fit in 64 unsigned bits")
        object.__setattr__(self, "stream_id", self.stream_id & _MASK64)

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, i: int) -> "RngStream":
        return RngStream(self.seed, (self.stream_id + i) & _MASK64)

    def lane(self, n: int) -> "RngStream":
        return RngStream(self.seed, (self.stream_id + n * LANE_STRIDE) & _MASK64)


def chunk_sizes(n_total: int, chunk: int) -> list[int]:
    """Split ``n_total`` work items into fixed-size chunks (last one ragged)."""
    if n_total < 0 or chunk <= 0:
        raise ValueError("need n_total >= 0 and chunk > 0")
    out = [chunk] * (n_total // chunk)
    if n_total % chunk:
        out.append(n_total % chunk)
    return out


def map_chunks(fn, n_total: int, chunk: int, rng: RngStream, threads: int = 1) -> list:
    """Run ``fn(start, count, stream)`` over fixed chunks of a replicate range.

    Chunk ``c`` covers replicates ``[c*chunk, c*chunk+count)`` and always
    receives ``rng.substream(c)``; results are returned in chunk order, so
    the merged output is independent of ``threads``.
    """
    sizes = chunk_sizes(n_total, chunk)
    tasks = []
    start = 0
    for c, count in enumerate(sizes):
        tasks.append((start, count, rng.substream(c)))
        start += count
    if threads <= 1 or len(tasks) <= 1:
        return [fn(s, c, st) for (s, c, st) in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: fn(*t), tasks))
