"""Compiled pair kernels. Each has a numpy twin in ``_numpy_kernels``."""

import numpy as np
from numba import njit, prange

_OPTS = dict(cache=True, nogil=True, fastmath=False, error_model="numpy")


@njit(parallel=True, **_OPTS)
def green_sum(targets, sources, weights, floor2, exclude_self):
    # out[i] = sum_j w_j (t_i - s_j) / |t_i - s_j|^n, pairs closer than the floor skipped
    m, n = targets.shape
    k = sources.shape[0]
    half_n = 0.5 * n
    out = np.zeros((m, n))
    skipped = np.zeros(m, dtype=np.int64)
    for i in prange(m):
        acc = np.zeros(n)
        diff = np.empty(n)
        count = 0
        for j in range(k):
            if exclude_self and i == j:
                continue
            r2 = 0.0
            for d in range(n):
                diff[d] = targets[i, d] - sources[j, d]
                r2 += diff[d] * diff[d]
            if r2 == 0.0 or r2 < floor2:
                count += 1
                continue
            coef = weights[j] / r2**half_n
            for d in range(n):
                acc[d] += coef * diff[d]
        for d in range(n):
            out[i, d] = acc[d]
        skipped[i] = count
    return out, skipped


@njit(parallel=True, **_OPTS)
def ksd_rows(points, scores, sigma):
    # row i holds sum_{j != i} of the RBF Stein kernel u(x_i, x_j)
    m, n = points.shape
    inv_s2 = 1.0 / (sigma * sigma)
    inv_s4 = inv_s2 * inv_s2
    rows = np.zeros(m)
    for i in prange(m):
        acc = 0.0
        for j in range(m):
            if i == j:
                continue
            r2 = 0.0
            ss = 0.0
            cross = 0.0
            for d in range(n):
                diff = points[i, d] - points[j, d]
                r2 += diff * diff
                ss += scores[i, d] * scores[j, d]
                cross += (scores[i, d] - scores[j, d]) * diff
            k = np.exp(-0.5 * r2 * inv_s2)
            acc += k * (ss + cross * inv_s2 + n * inv_s2 - r2 * inv_s4)
        rows[i] = acc
    return rows


@njit(parallel=True, **_OPTS)
def distance_histogram(points, dmax, nbins):
    m, n = points.shape
    counts = np.zeros((m, nbins), dtype=np.int64)
    scale = nbins / dmax
    for i in prange(m):
        for j in range(i + 1, m):
            r2 = 0.0
            for d in range(n):
                diff = points[i, d] - points[j, d]
                r2 += diff * diff
            b = int(np.sqrt(r2) * scale)
            if b >= nbins:
                b = nbins - 1
            counts[i, b] += 1
    return counts.sum(axis=0)


@njit(**_OPTS)
def distances_in_bins(points, dmax, nbins, lo_bin, hi_bin):
    m, n = points.shape
    scale = nbins / dmax
    out = []
    for i in range(m):
        for j in range(i + 1, m):
            r2 = 0.0
            for d in range(n):
                diff = points[i, d] - points[j, d]
                r2 += diff * diff
            r = np.sqrt(r2)
            b = int(r * scale)
            if b >= nbins:
                b = nbins - 1
            if lo_bin <= b <= hi_bin:
                out.append(r)
    return np.array(out)


@njit(parallel=True, **_OPTS)
def separable_sum(ex, ey):
    # out[a, b] = sum_i ex[a, i] * ey[b, i]
    nx, m = ex.shape
    ny = ey.shape[0]
    out = np.zeros((nx, ny))
    for a in prange(nx):
        for b in range(ny):
            acc = 0.0
            for i in range(m):
                acc += ex[a, i] * ey[b, i]
            out[a, b] = acc
    return out
