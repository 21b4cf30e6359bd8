"""Deterministic seed derivation and order-preserving parallel maps.

Every stochastic routine in this package splits its work into fixed-size
chunks, derives one child seed per chunk index, and reduces the chunk
results in index order.  The chunk layout never depends on the worker
count, so a given (seed, chunk size) pair yields bit-identical output
whether the chunks run on 1 thread or 8.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

T = TypeVar("T")
R = TypeVar("R")


def splitmix64(x: int) -> int:
    """One output of the splitmix64 mixer for state ``x``."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def child_seed(seed: int, task: int) -> int:
    """Child seed for task index ``task`` under master ``seed``.

    This is output ``task`` of the splitmix64 stream started at ``seed``:
    ``splitmix64(seed + task * GOLDEN)`` with 64-bit wraparound.
    """
    if task < 0:
        raise ValueError("task index must be nonnegative")
    return splitmix64((seed + task * _GOLDEN) & _MASK64)


def ordered_map(fn: Callable[[T], R], tasks: Sequence[T], threads: int = 1) -> list[R]:
    """Map ``fn`` over ``tasks``, returning results in task order.

    With ``threads`` > 1 the tasks run on a thread pool; the result order
    (and therefore any order-sensitive reduction done by the caller) is
    identical to the sequential run.
    """
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))
