"""Hot numeric kernels: numba-compiled with a pure-numpy fallback.

Backend selection is done once at import time from the FLASHVID_BACKEND
environment variable ("numba" or "numpy"; default numba when importable).
Both paths are written to produce bitwise-identical results: all ties in
argmax/argmin resolve to the smallest index, and reductions use the same
operand order. See benchmarks/bench_backends.py for a speed comparison.
"""

import os

import numpy as np


def _mmdp_greedy_numpy(dist, quota):
    """Greedy max-min selection on a nonnegative dissimilarity matrix.

    First pick maximizes the row-minimum over off-diagonal entries; each
    later pick maximizes the minimum dissimilarity to the already-selected
    set (row of the candidate, columns of the selected). Ties always go to
    the smallest index. Returns the selected indices in selection order.
    """
    n = dist.shape[0]
    quota = int(min(quota, n))
    out = np.empty(quota, dtype=np.int64)
    if quota == 0:
        return out
    if n == 1:
        out[0] = 0
        return out
    masked = dist.copy()
    np.fill_diagonal(masked, np.inf)
    first = int(np.argmax(masked.min(axis=1)))
    out[0] = first
    dsel = dist[:, first].copy()
    dsel[first] = -np.inf
    for step in range(1, quota):
        k = int(np.argmax(dsel))
        out[step] = k
        np.minimum(dsel, dist[:, k], out=dsel)
        dsel[k] = -np.inf
    return out


def _mmdp_greedy_loops(dist, quota):
    # Loop twin of _mmdp_greedy_numpy, identical tie handling.
    n = dist.shape[0]
    quota = int(min(quota, n))
    out = np.empty(quota, dtype=np.int64)
    if quota == 0:
        return out
    if n == 1:
        out[0] = 0
        return out
    first = 0
    best = -np.inf
    for i in range(n):
        row_min = np.inf
        for j in range(n):
            if j != i and dist[i, j] < row_min:
                row_min = dist[i, j]
        if row_min > best:
            best = row_min
            first = i
    out[0] = first
    dsel = np.empty(n, dtype=np.float64)
    for i in range(n):
        dsel[i] = dist[i, first]
    dsel[first] = -np.inf
    for step in range(1, quota):
        k = 0
        best = -np.inf
        for i in range(n):
            if dsel[i] > best:
                best = dsel[i]
                k = i
        out[step] = k
        for i in range(n):
            if dist[i, k] < dsel[i]:
                dsel[i] = dist[i, k]
        dsel[k] = -np.inf
    return out


def _knn_density_numpy(dist2, k):
    """Gaussian kNN density: exp(-mean of the k smallest squared distances).

    ``dist2`` is the full squared-distance matrix; the diagonal (self) is
    excluded from each row's neighborhood.
    """
    n = dist2.shape[0]
    d2 = dist2.copy()
    np.fill_diagonal(d2, np.inf)
    smallest = np.sort(np.partition(d2, k - 1, axis=1)[:, :k], axis=1)
    acc = np.zeros(n, dtype=np.float64)
    for j in range(k):  # ascending accumulation, same order as the loops twin
        acc += smallest[:, j]
    return np.exp(-acc / k)


def _knn_density_loops(dist2, k):
    # Loop twin of _knn_density_numpy: per row, keep the k smallest
    # off-diagonal entries in a sorted insertion buffer, then accumulate
    # them ascending so the summation order matches exactly.
    n = dist2.shape[0]
    rho = np.empty(n, dtype=np.float64)
    small = np.empty(k, dtype=np.float64)
    for i in range(n):
        for j in range(k):
            small[j] = np.inf
        for j in range(n):
            if j == i:
                continue
            v = dist2[i, j]
            if v < small[k - 1]:
                p = k - 1
                while p > 0 and small[p - 1] > v:
                    small[p] = small[p - 1]
                    p -= 1
                small[p] = v
        acc = 0.0
        for j in range(k):
            acc += small[j]
        rho[i] = np.exp(-acc / k)
    return rho


_requested = os.environ.get("FLASHVID_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise ValueError(
        f"FLASHVID_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

_use_numba = _requested != "numpy"
if _use_numba:
    try:
        from numba import njit
    except ImportError:
        if _requested == "numba":
            raise
        _use_numba = False

if _use_numba:
    BACKEND = "numba"
    mmdp_greedy = njit(cache=True)(_mmdp_greedy_loops)
    knn_density = njit(cache=True)(_knn_density_loops)
else:
    BACKEND = "numpy"
    mmdp_greedy = _mmdp_greedy_numpy
    knn_density = _knn_density_numpy


def backend():
    """Name of the active kernel backend ("numba" or "numpy")."""
    return BACKEND
