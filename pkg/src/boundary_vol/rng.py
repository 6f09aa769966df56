"""Counter-based random streams keyed by (seed, stream, block).

Every Monte Carlo routine in the package draws its randomness from a
Philox generator whose key is derived from the user seed plus a tuple of
integers naming the stream and the replication block. A block of
replications therefore sees the same numbers no matter how many threads
process the blocks or in which order they finish.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

#: Number of replications that share one generator.
BLOCK_SIZE = 1000

_MASK64 = (1 << 64) - 1


def stream_id(name: str) -> int:
    """Stable integer id for a named stream."""
    return zlib.crc32(name.encode("utf-8"))


def generator(seed: int, *key: int | str) -> np.random.Generator:
    """Return a Philox generator for ``seed`` and the spawn key ``key``.

    String key components are mapped through :func:`stream_id`.
    """
    spawn = tuple(stream_id(k) if isinstance(k, str) else int(k) for k in key)
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=spawn)
    return np.random.Generator(np.random.Philox(ss))


def blocks(total: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    """Split ``total`` replications into ``(block_index, size)`` pairs."""
    if total <= 0:
        return []
    full, rest = divmod(total, block_size)
    out = [(b, block_size) for b in range(full)]
    if rest:
        out.append((full, rest))
    return out


def map_blocks(
    fn: Callable[[int, int], T],
    total: int,
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> list[T]:
    """Apply ``fn(block_index, size)`` to every block; results in block order."""
    work = blocks(total, block_size)
    if threads <= 1 or len(work) <= 1:
        return [fn(b, s) for b, s in work]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda bs: fn(*bs), work))


def ordered_concat(parts: Sequence[np.ndarray]) -> np.ndarray:
    """Concatenate per-block results in block order."""
    if not parts:
        return np.empty(0)
    return np.concatenate(parts, axis=0)
