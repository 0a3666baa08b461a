"""Vectorised numpy versions of the pair kernels, processed in row blocks."""

import numpy as np

_BLOCK = 256


def green_sum(targets, sources, weights, floor2, exclude_self):
    m, n = targets.shape
    out = np.zeros((m, n))
    skipped = np.zeros(m, dtype=np.int64)
    for start in range(0, m, _BLOCK):
        stop = min(start + _BLOCK, m)
        diff = targets[start:stop, None, :] - sources[None, :, :]
        r2 = np.einsum("ijd,ijd->ij", diff, diff)
        self_pair = np.zeros(r2.shape, dtype=bool)
        if exclude_self:
            rows = np.arange(start, stop)
            rows = rows[rows < sources.shape[0]]
            self_pair[rows - start, rows] = True
        skip = ((r2 == 0.0) | (r2 < floor2)) & ~self_pair
        skipped[start:stop] = skip.sum(axis=1)
        skip |= self_pair
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(skip, 0.0, weights[None, :] / r2 ** (0.5 * n))
        out[start:stop] = np.einsum("ij,ijd->id", coef, diff)
    return out, skipped


def ksd_rows(points, scores, sigma):
    m, n = points.shape
    inv_s2 = 1.0 / (sigma * sigma)
    rows = np.zeros(m)
    for start in range(0, m, _BLOCK):
        stop = min(start + _BLOCK, m)
        diff = points[start:stop, None, :] - points[None, :, :]
        r2 = np.einsum("ijd,ijd->ij", diff, diff)
        ss = np.einsum("id,jd->ij", scores[start:stop], scores)
        sdiff = scores[start:stop, None, :] - scores[None, :, :]
        cross = np.einsum("ijd,ijd->ij", sdiff, diff)
        k = np.exp(-0.5 * r2 * inv_s2)
        u = k * (ss + cross * inv_s2 + n * inv_s2 - r2 * inv_s2 * inv_s2)
        idx = np.arange(start, stop)
        u[idx - start, idx] = 0.0
        rows[start:stop] = u.sum(axis=1)
    return rows


def _pair_distances(points, start, stop):
    diff = points[start:stop, None, :] - points[None, :, :]
    r = np.sqrt(np.einsum("ijd,ijd->ij", diff, diff))
    upper = np.arange(points.shape[0])[None, :] > np.arange(start, stop)[:, None]
    return r[upper]


def _bin_index(r, dmax, nbins):
    return np.minimum((r * (nbins / dmax)).astype(np.int64), nbins - 1)


def distance_histogram(points, dmax, nbins):
    counts = np.zeros(nbins, dtype=np.int64)
    for start in range(0, points.shape[0], _BLOCK):
        r = _pair_distances(points, start, min(start + _BLOCK, points.shape[0]))
        counts += np.bincount(_bin_index(r, dmax, nbins), minlength=nbins)
    return counts


def distances_in_bins(points, dmax, nbins, lo_bin, hi_bin):
    found = []
    for start in range(0, points.shape[0], _BLOCK):
        r = _pair_distances(points, start, min(start + _BLOCK, points.shape[0]))
        b = _bin_index(r, dmax, nbins)
        found.append(r[(b >= lo_bin) & (b <= hi_bin)])
    return np.concatenate(found) if found else np.empty(0)


def separable_sum(ex, ey):
    # einsum without optimize stays off BLAS, so the result does not depend on BLAS threading
    return np.einsum("ai,bi->ab", ex, ey)
