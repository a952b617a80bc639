"""
Chunked, order-preserving parallel map for independent grid scans.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

T = TypeVar("T")

CHUNK_SIZE = 256


def chunked_map(
    func: Callable[[np.ndarray], T],
    n_items: int,
    workers: int = 1,
    chunk_size: int = CHUNK_SIZE,
) -> list[T]:
    """
    Apply func to consecutive index chunks of range(n_items).

    Results come back in chunk order whatever the worker count, so any
    reduction over them is bit-identical between serial and threaded runs.

    Args:
        func: Called with an integer index array
        n_items: Total number of indices
        workers: Thread count (1 runs inline)
        chunk_size: Indices per chunk

    Returns:
        One result per chunk, in index order
    """
    n_chunks = max(1, math.ceil(n_items / chunk_size))
    chunks = np.array_split(np.arange(n_items), n_chunks)
    if workers <= 1 or n_chunks == 1:
        return [func(chunk) for chunk in chunks]

    with ThreadPoolExecutor(max_workers=min(workers, n_chunks)) as pool:
        return list(pool.map(func, chunks))
