"""Regular 2-D grids: density/field evaluation, KDEs, KDE differences and median filtering.

Nodes sit at cell centres, ``x_a = x_min + (a + 1/2) dx``; grid values are
indexed ``[ix, iy]``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import _accel
from .errors import GridError, InvalidInputError

MIN_NODES = 8


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        for name in ("x_min", "x_max", "y_min", "y_max"):
            if not math.isfinite(getattr(self, name)):
                raise GridError(f"{name} must be finite")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise GridError("grid extent must be positive on both axes")
        if int(self.nx) != self.nx or int(self.ny) != self.ny or min(self.nx, self.ny) < MIN_NODES:
            raise GridError(f"nx and ny must be integers >= {MIN_NODES}")

    @classmethod
    def square(cls, half_width: float, n: int, center=(0.0, 0.0)) -> "GridSpec":
        cx, cy = center
        return cls(cx - half_width, cx + half_width, cy - half_width, cy + half_width, n, n)

    @classmethod
    def covering(cls, points, margin: float, n: int = 200) -> "GridSpec":
        pts = np.asarray(points, dtype=float)
        lo = pts.min(axis=0) - margin
        hi = pts.max(axis=0) + margin
        return cls(float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]), n, n)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def xs(self) -> np.ndarray:
        return self.x_min + (np.arange(self.nx) + 0.5) * self.dx

    def ys(self) -> np.ndarray:
        return self.y_min + (np.arange(self.ny) + 0.5) * self.dy

    def nodes(self) -> np.ndarray:
        """All nodes as an (nx*ny, 2) array in row-major order (x outer)."""
        gx, gy = np.meshgrid(self.xs(), self.ys(), indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])


def _write_rows(header, rows, path):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


@dataclass(frozen=True, eq=False)
class ScalarGrid:
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.spec.shape:
            raise GridError(f"values of shape {v.shape} for a {self.spec.shape} grid")
        if not np.all(np.isfinite(v)):
            raise GridError("grid values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def integral(self) -> float:
        return float(self.values.sum() * self.spec.cell_area)

    def to_csv(self, path=None) -> str:
        nodes = self.spec.nodes()
        vals = self.values.ravel()
        rows = ([repr(x), repr(y), repr(v)] for (x, y), v in zip(nodes.tolist(), vals.tolist()))
        return _write_rows(["x", "y", "value"], rows, path)


@dataclass(frozen=True, eq=False)
class VectorGrid:
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (*self.spec.shape, 2):
            raise GridError(f"values of shape {v.shape} for a {self.spec.shape} vector grid")
        if not np.all(np.isfinite(v)):
            raise GridError("grid values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def to_csv(self, path=None) -> str:
        nodes = self.spec.nodes()
        vals = self.values.reshape(-1, 2)
        rows = (
            [repr(x), repr(y), repr(u), repr(w)]
            for (x, y), (u, w) in zip(nodes.tolist(), vals.tolist())
        )
        return _write_rows(["x", "y", "v_1", "v_2"], rows, path)


def evaluate_on_grid(f, spec: GridSpec, vectorized: bool = True) -> ScalarGrid | VectorGrid:
    """Evaluate ``f`` at every node.

    With ``vectorized`` the function receives the (M, 2) node array at once;
    otherwise it is called per node with a length-2 vector. Scalar outputs give
    a ScalarGrid, 2-vector outputs a VectorGrid.
    """
    nodes = spec.nodes()
    if vectorized:
        out = np.asarray(f(nodes), dtype=float)
        if out.ndim == 0:
            out = np.full(len(nodes), float(out))
    else:
        out = np.array([np.asarray(f(p), dtype=float) for p in nodes])
    if out.shape == (len(nodes),):
        values = out.reshape(spec.shape)
    elif out.shape == (len(nodes), 2):
        values = out.reshape(*spec.shape, 2)
    else:
        raise InvalidInputError(f"function returned shape {out.shape}; expected scalars or 2-vectors")
    bad = ~np.isfinite(values.reshape(len(nodes), -1)).all(axis=1)
    if bad.any():
        x, y = nodes[np.argmax(bad)]
        raise InvalidInputError(f"non-finite value at node ({x!r}, {y!r})")
    return ScalarGrid(spec, values) if values.ndim == 2 else VectorGrid(spec, values)


def _kde_sums(points, bandwidth, spec):
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidInputError("KDE points must be an (N, 2) array")
    if not bandwidth > 0:
        raise InvalidInputError("bandwidth must be positive")
    # the Gaussian factorises over axes, so the grid sum is a product of two 1-D tables
    ex = np.exp(-0.5 * ((spec.xs()[:, None] - pts[None, :, 0]) / bandwidth) ** 2)
    ey = np.exp(-0.5 * ((spec.ys()[:, None] - pts[None, :, 1]) / bandwidth) ** 2)
    return _accel.kernel("separable_sum")(ex, ey)


def kde(points, bandwidth: float, spec: GridSpec) -> ScalarGrid:
    """Gaussian kernel density estimate (normalised to unit mass) at the grid nodes."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 1:
        raise InvalidInputError("KDE needs at least one point")
    sums = _kde_sums(pts, bandwidth, spec)
    return ScalarGrid(spec, sums / (len(pts) * 2.0 * math.pi * bandwidth**2))


def kde_difference(points_before, points_after, bandwidth: float, spec: GridSpec, step: float = 1e-4) -> ScalarGrid:
    """(kde(after) - kde(before)) / step, an estimate of delta_p when after = before + step * v."""
    a = np.asarray(points_before, dtype=float)
    b = np.asarray(points_after, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError(f"point sets differ in shape: {a.shape} vs {b.shape}")
    if not step > 0:
        raise InvalidInputError("step must be positive")
    diff = _kde_sums(b, bandwidth, spec) - _kde_sums(a, bandwidth, spec)
    return ScalarGrid(spec, diff / (len(a) * 2.0 * math.pi * bandwidth**2 * step))


def median_filter(grid: ScalarGrid, window: int = 3) -> ScalarGrid:
    """Window x window median; border nodes use only the in-bounds part of the window."""
    if int(window) != window or window < 3 or window % 2 == 0 or window > min(grid.spec.shape):
        raise GridError(f"window must be an odd integer in [3, {min(grid.spec.shape)}], got {window}")
    h = window // 2
    padded = np.pad(grid.values, h, mode="constant", constant_values=np.nan)
    windows = sliding_window_view(padded, (window, window))
    return ScalarGrid(grid.spec, np.nanmedian(windows, axis=(-2, -1)))


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    return float(a @ b) / den if den > 0 else 0.0
