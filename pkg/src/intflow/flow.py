"""Integrable flow estimation at sample locations.

Given samples x^i of p ~ exp(ell) and the perturbation delta_ell at each
sample, the flow is the electrostatic field of the centred perturbation
"charges" divided by the density at the target:

    v^i = -1 / ((N - 1) exp(ell_i)) * sum_{j != i} (delta_ell_j - mean(delta_ell)) G_n(x^i - x^j)

The leading minus makes ``div(v p) = -delta_p``, i.e. moving samples along
``+v`` carries p towards p + delta_p. Magnitudes are only defined up to the
(unknown) partition function of exp(ell).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from . import _accel
from .distributions import GaussianMixture, Perturbation, SampleSet, delta_p
from .errors import GridError, InsufficientSamplesError, InvalidInputError
from .griddiag import GridSpec, ScalarGrid, VectorGrid
from .kernels import greens_constant

DEFAULT_PAIR_FLOOR = 1e-9
SCALE_CONVENTION = "defined up to a positive constant (the partition function of exp(ell))"
_EXP_LIMIT = 700.0


@dataclass(frozen=True, eq=False)
class FlowField:
    """Flow vectors at the sample points.

    ``log_scale`` is nonzero only when ell had to be shifted to keep
    exp(-ell) finite; the unshifted field is ``vectors * exp(-log_scale)``.
    """

    points: np.ndarray
    vectors: np.ndarray
    clipped: np.ndarray = None
    skipped_pairs: int = 0
    log_scale: float = 0.0
    scale_convention: str = SCALE_CONVENTION

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        vec = np.array(self.vectors, dtype=float)
        if pts.shape != vec.shape or pts.ndim != 2:
            raise InvalidInputError(f"points {pts.shape} and vectors {vec.shape} must match")
        clipped = (
            np.zeros(len(vec), dtype=bool)
            if self.clipped is None
            else np.array(self.clipped, dtype=bool)
        )
        if clipped.shape != (len(vec),):
            raise InvalidInputError("one clipped flag per vector")
        for a in (pts, vec, clipped):
            a.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "vectors", vec)
        object.__setattr__(self, "clipped", clipped)

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1)

    def to_csv(self, path=None) -> str:
        """Serialise as ``i,x_1..x_n,v_1..v_n,clipped``; returns the text, writing it if ``path`` is given."""
        n = self.dim
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", *[f"x_{d + 1}" for d in range(n)], *[f"v_{d + 1}" for d in range(n)], "clipped"])
        for i in range(len(self)):
            w.writerow(
                [i, *map(repr, self.points[i].tolist()), *map(repr, self.vectors[i].tolist()),
                 int(self.clipped[i])]
            )
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "FlowField":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        n = (len(header) - 2) // 2
        data = np.array([[float(v) for v in r[1:1 + 2 * n]] for r in body]).reshape(-1, 2 * n)
        flags = np.array([r[-1] == "1" for r in body], dtype=bool)
        return cls(data[:, :n], data[:, n:], flags)


def _canonical_order(points, *channels) -> np.ndarray:
    # lexicographic order on (coordinates, channels); makes sums independent of input order
    keys = [c for c in reversed(channels)] + [points[:, d] for d in reversed(range(points.shape[1]))]
    return np.lexsort(keys)


def _green_sum(targets, sources, weights, floor, exclude_self):
    fn = _accel.kernel("green_sum")
    return fn(
        np.ascontiguousarray(targets, dtype=float),
        np.ascontiguousarray(sources, dtype=float),
        np.ascontiguousarray(weights, dtype=float),
        float(floor) ** 2,
        bool(exclude_self),
    )


def centered_weights(delta_ell) -> np.ndarray:
    """delta_ell minus its mean over all samples.

    Differences are taken against the first entry before averaging, so a
    constant channel yields exactly zero weights.
    """
    d = np.asarray(delta_ell, dtype=float)
    rel = d - d[0]
    return rel - rel.mean()


def estimate_flow(
    samples: SampleSet,
    dim: int | None = None,
    pair_distance_floor: float = DEFAULT_PAIR_FLOOR,
) -> FlowField:
    """Pairwise Green's-function estimate of the flow at every sample.

    Pairs closer than ``pair_distance_floor`` (other than i == j) are left out
    and tallied in ``skipped_pairs``.
    """
    pts = np.asarray(samples.points, dtype=float)
    ell = np.asarray(samples.ell, dtype=float)
    dell = np.asarray(samples.delta_ell, dtype=float)
    if pts.ndim != 2:
        raise InvalidInputError("points must be an (N, n) array")
    N, n = pts.shape
    if dim is not None and dim != n:
        raise InvalidInputError(f"points have dimension {n}, expected {dim}")
    if N < 2:
        raise InsufficientSamplesError("flow estimation needs at least 2 samples")
    if not np.all(np.isfinite(ell)):
        raise InvalidInputError("non-finite log density")
    if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(dell))):
        raise InvalidInputError("non-finite points or perturbation values")

    order = _canonical_order(pts, ell, dell)
    pts_s, ell_s, dell_s = pts[order], ell[order], dell[order]
    sums, skipped = _green_sum(pts_s, pts_s, centered_weights(dell_s), pair_distance_floor, True)

    shift = 0.0
    if np.max(np.abs(ell_s)) > _EXP_LIMIT:
        shift = float(np.max(ell_s))
    inv_p = np.exp(-(ell_s - shift)) if shift else np.exp(-ell_s)
    vec_s = -(greens_constant(n) / (N - 1)) * inv_p[:, None] * sums

    vectors = np.empty_like(vec_s)
    vectors[order] = vec_s
    return FlowField(pts, vectors, skipped_pairs=int(skipped.sum()), log_scale=shift)


def estimate_flow_normalized(
    points,
    density_values,
    delta_p_values,
    source_points,
    dim: int | None = None,
    source_density_values=None,
    pair_distance_floor: float = DEFAULT_PAIR_FLOOR,
) -> FlowField:
    """Monte Carlo form of the convolution solution with a known normalised density.

    v(x^i) = -(1 / p(x^i)) mean_j [(delta_p(z^j) / p(z^j)) G_n(x^i - z^j)]

    ``density_values`` are p at the targets; ``source_density_values`` are p
    at the sources and default to ``density_values`` when the sources are the
    targets themselves.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    src = np.atleast_2d(np.asarray(source_points, dtype=float))
    p_t = np.asarray(density_values, dtype=float)
    dp = np.asarray(delta_p_values, dtype=float)
    p_s = p_t if source_density_values is None else np.asarray(source_density_values, dtype=float)
    n = pts.shape[1]
    if dim is not None and dim != n:
        raise InvalidInputError(f"points have dimension {n}, expected {dim}")
    if src.shape[0] < 1 or src.shape[1] != n:
        raise InvalidInputError("need at least one source point of matching dimension")
    if p_t.shape != (pts.shape[0],) or p_s.shape != (src.shape[0],) or dp.shape != (src.shape[0],):
        raise InvalidInputError("density / perturbation arrays do not match the point sets")
    if np.any(~(p_t > 0)) or np.any(~(p_s > 0)):
        raise InvalidInputError("densities must be strictly positive")

    order = _canonical_order(src, p_s, dp)
    sums, skipped = _green_sum(pts, src[order], (dp / p_s)[order], pair_distance_floor, False)
    vectors = -(greens_constant(n) / src.shape[0]) * sums / p_t[:, None]
    return FlowField(pts, vectors, skipped_pairs=int(skipped.sum()))


def clip_flow(field: FlowField, factor: float = 10.0) -> FlowField:
    """Rescale vectors longer than ``factor`` times the median norm down to that length."""
    norms = field.norms()
    m = float(np.median(norms)) if len(norms) else 0.0
    if m == 0.0:
        return field
    limit = factor * m
    over = norms > limit
    vectors = field.vectors.copy()
    vectors[over] *= (limit / norms[over])[:, None]
    return FlowField(
        field.points, vectors, field.clipped | over, field.skipped_pairs, field.log_scale
    )


def apply_flow(points, field: FlowField | np.ndarray, epsilon: float) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    vec = field.vectors if isinstance(field, FlowField) else np.asarray(field, dtype=float)
    if pts.shape != vec.shape:
        raise InvalidInputError(f"points {pts.shape} and flow {vec.shape} differ in shape")
    return pts + epsilon * vec


# -- grid quadrature and the continuity check ------------------------------------

MIN_CONTINUITY_CELLS = 32


def quadrature_flux(delta_p_grid: ScalarGrid) -> VectorGrid:
    """v p on the grid by direct quadrature of -(delta_p * G_2) over the grid cells.

    The singular self-cell contributes nothing (the cell integral of G_2 over
    a centred square vanishes by symmetry).
    """
    spec = delta_p_grid.spec
    dx, dy = spec.dx, spec.dy
    ox = np.arange(-(spec.nx - 1), spec.nx) * dx
    oy = np.arange(-(spec.ny - 1), spec.ny) * dy
    gx, gy = np.meshgrid(ox, oy, indexing="ij")
    r2 = gx**2 + gy**2
    r2[spec.nx - 1, spec.ny - 1] = np.inf
    c = greens_constant(2)
    kx, ky = c * gx / r2, c * gy / r2
    q = delta_p_grid.values * (dx * dy)
    fx = -fftconvolve(q, kx, mode="valid")
    fy = -fftconvolve(q, ky, mode="valid")
    return VectorGrid(spec, np.stack([fx, fy], axis=-1))


def divergence(flux: VectorGrid) -> ScalarGrid:
    """Central-difference divergence (one-sided second order at the border)."""
    spec = flux.spec
    fx, fy = flux.values[..., 0], flux.values[..., 1]
    div = np.gradient(fx, spec.dx, axis=0, edge_order=2) + np.gradient(fy, spec.dy, axis=1, edge_order=2)
    return ScalarGrid(spec, div)


@dataclass(frozen=True)
class ContinuityReport:
    residual: ScalarGrid
    relative_l2: float
    flux: VectorGrid = field(repr=False)
    delta_p: ScalarGrid = field(repr=False)
    mask_cells: int = 0


def continuity_residual(
    mix: GaussianMixture,
    pert: Perturbation,
    spec: GridSpec,
    field_on_grid: VectorGrid | None = None,
    density_cutoff: float = 1e-4,
) -> ContinuityReport:
    """Check delta_p + div(v p) = 0 on a grid.

    ``field_on_grid`` holds v p at the nodes; when omitted it is computed by
    quadrature against the analytic delta_p. The relative L2 norm is taken over
    nodes where p exceeds ``density_cutoff`` times its grid maximum; when both
    the residual and delta_p vanish there it is reported as 0.
    """
    if mix.dim != 2:
        raise InvalidInputError("continuity check is two-dimensional only")
    if spec.nx < MIN_CONTINUITY_CELLS or spec.ny < MIN_CONTINUITY_CELLS:
        raise GridError(f"grid too coarse: need at least {MIN_CONTINUITY_CELLS} cells per axis")
    pert.check(mix)
    nodes = spec.nodes()
    dp = ScalarGrid(spec, delta_p(mix, pert, nodes).reshape(spec.shape))
    flux = quadrature_flux(dp) if field_on_grid is None else field_on_grid
    if flux.spec != spec:
        raise GridError("flux grid does not match the requested grid")
    residual = ScalarGrid(spec, divergence(flux).values + dp.values)

    p = mix.density(nodes).reshape(spec.shape)
    mask = p > density_cutoff * p.max()
    num = float(np.sqrt(np.sum(residual.values[mask] ** 2)))
    den = float(np.sqrt(np.sum(dp.values[mask] ** 2)))
    if den == 0.0:
        rel = 0.0 if num == 0.0 else float("inf")
    else:
        rel = num / den
    return ContinuityReport(residual, rel, flux, dp, int(mask.sum()))
