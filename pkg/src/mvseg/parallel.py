"""Chunked data-parallel evaluation over the leading (pixel) axis.

NumPy's batched linear algebra releases the GIL, so a thread pool is enough
to spread per-pixel eigendecompositions over cores.  Results are always
reassembled in input order, and every reduction is performed by the caller on
the concatenated array, so the output does not depend on ``workers``.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

MIN_CHUNK = 128


def map_chunks(func, batched, workers=1, min_chunk=MIN_CHUNK):
    """Evaluate ``func(batched[i:j])`` over row chunks and concatenate.

    Parameters
    ----------
    func : callable
        Maps an array of shape ``(k, ...)`` to an array of shape ``(k, ...)``.
    batched : ndarray
        Input whose axis 0 is split between workers.
    workers : int
        Thread count.  ``1`` evaluates ``func`` once on the whole array.
    """
    batched = np.asarray(batched)
    n = batched.shape[0]
    workers = max(1, int(workers or 1))
    if workers == 1 or n < 2 * min_chunk:
        return func(batched)
    n_chunks = min(workers, max(1, n // min_chunk))
    bounds = np.linspace(0, n, n_chunks + 1).astype(int)
    pieces = [batched[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(func, pieces))
    if isinstance(results[0], tuple):
        return tuple(np.concatenate(parts, axis=0) for parts in zip(*results))
    return np.concatenate(results, axis=0)
