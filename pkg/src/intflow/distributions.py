"""Gaussian-mixture test densities and their analytic mean perturbations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidDistributionError, InvalidPerturbationError, InvalidInputError


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Finite mixture of multivariate normals.

    Weights must be positive and sum to one; every covariance must be
    symmetric positive definite. Cholesky factors and inverses are cached at
    construction.
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False)
    _prec: np.ndarray = field(init=False, repr=False)
    _log_norm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = _frozen(self.weights)
        mu = _frozen(self.means)
        cov = _frozen(self.covariances)
        if w.ndim != 1 or w.size == 0:
            raise InvalidDistributionError("weights must be a non-empty vector")
        if mu.ndim != 2 or mu.shape[0] != w.size:
            raise InvalidDistributionError("means must be a (components, dim) array")
        k, n = mu.shape
        if n < 1:
            raise InvalidDistributionError("dimension must be positive")
        if cov.shape != (k, n, n):
            raise InvalidDistributionError(
                f"covariances must have shape {(k, n, n)}, got {cov.shape}"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(mu)) and np.all(np.isfinite(cov))):
            raise InvalidDistributionError("mixture parameters must be finite")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidDistributionError("weights must be positive and sum to 1")
        if not np.allclose(cov, np.swapaxes(cov, 1, 2), rtol=0, atol=1e-12):
            raise InvalidDistributionError("covariances must be symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise InvalidDistributionError("covariance is not positive definite") from exc
        eye = np.broadcast_to(np.eye(n), cov.shape)
        prec = np.linalg.solve(cov, eye)
        log_det = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)
        object.__setattr__(self, "_chol", _frozen(chol))
        object.__setattr__(self, "_prec", _frozen(prec))
        object.__setattr__(
            self, "_log_norm", _frozen(np.log(w) - 0.5 * (n * np.log(2 * np.pi) + log_det))
        )

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    def min_std(self) -> float:
        """Smallest standard deviation along any principal axis of any component."""
        return float(np.sqrt(np.linalg.eigvalsh(self.covariances).min()))

    def shifted(self, shifts, amount: float = 1.0) -> "GaussianMixture":
        return GaussianMixture(self.weights, self.means + amount * np.asarray(shifts), self.covariances)

    # -- evaluation ---------------------------------------------------------

    def _points(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[-1] != self.dim:
            raise InvalidInputError(f"points of dimension {x.shape[-1]} for a {self.dim}-D mixture")
        return x, single

    def _component_terms(self, x):
        # log(w_c N(x; mu_c, Sigma_c)) and Sigma_c^{-1} (x - mu_c)
        diff = x[:, None, :] - self.means[None, :, :]
        white = np.einsum("kij,nkj->nki", self._prec, diff)
        quad = np.einsum("nki,nki->nk", diff, white)
        return self._log_norm[None, :] - 0.5 * quad, white

    def responsibilities(self, x) -> np.ndarray:
        x, single = self._points(x)
        logs, _ = self._component_terms(x)
        r = np.exp(logs - logsumexp(logs, axis=1, keepdims=True))
        return r[0] if single else r

    def log_density(self, x):
        x, single = self._points(x)
        logs, _ = self._component_terms(x)
        out = logsumexp(logs, axis=1)
        return float(out[0]) if single else out

    def density(self, x):
        return np.exp(self.log_density(x))

    def grad_log_density(self, x) -> np.ndarray:
        x, single = self._points(x)
        logs, white = self._component_terms(x)
        r = np.exp(logs - logsumexp(logs, axis=1, keepdims=True))
        out = -np.einsum("nk,nki->ni", r, white)
        return out[0] if single else out

    def sample(self, count: int, seed=None) -> np.ndarray:
        return sample(self, count, seed)


@dataclass(frozen=True, eq=False)
class Perturbation:
    """Infinitesimal displacement of every component mean along ``mean_shifts``, times ``scale``."""

    mean_shifts: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        shifts = _frozen(self.mean_shifts)
        if shifts.ndim != 2:
            raise InvalidPerturbationError("mean_shifts must be a (components, dim) array")
        if not (np.all(np.isfinite(shifts)) and np.isfinite(self.scale)):
            raise InvalidPerturbationError("perturbation must be finite")
        object.__setattr__(self, "mean_shifts", shifts)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def displacement(self) -> np.ndarray:
        """Mean displacement per unit perturbation strength."""
        return self.scale * self.mean_shifts

    def is_zero(self) -> bool:
        return self.scale == 0.0 or not np.any(self.mean_shifts)

    def check(self, mix: GaussianMixture) -> None:
        if self.mean_shifts.shape != mix.means.shape:
            raise InvalidPerturbationError(
                f"perturbation shape {self.mean_shifts.shape} does not match means {mix.means.shape}"
            )

    @classmethod
    def random(cls, mix: GaussianMixture, seed=None, scale: float | None = None) -> "Perturbation":
        """Unit-sphere direction per component; scale defaults to 0.1 of the smallest component std."""
        rng = np.random.default_rng(seed)
        dirs = rng.standard_normal(mix.means.shape)
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        if scale is None:
            scale = 0.1 * mix.min_std()
        return cls(dirs, scale)


@dataclass(frozen=True, eq=False)
class SampleSet:
    points: np.ndarray
    ell: np.ndarray
    delta_ell: np.ndarray
    seed: object = None

    def __post_init__(self):
        pts = _frozen(self.points)
        ell = _frozen(self.ell)
        dell = _frozen(self.delta_ell)
        if pts.ndim != 2:
            raise InvalidInputError("points must be an (N, n) array")
        if ell.shape != (pts.shape[0],) or dell.shape != (pts.shape[0],):
            raise InvalidInputError("ell and delta_ell must have one entry per point")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "delta_ell", dell)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @classmethod
    def draw(cls, mix: GaussianMixture, pert: Perturbation, count: int, seed=None) -> "SampleSet":
        pts = sample(mix, count, seed)
        return cls(pts, mix.log_density(pts), delta_ell(mix, pert, pts), seed)


def sample(mix: GaussianMixture, count: int, seed=None) -> np.ndarray:
    """Draw ``count`` i.i.d. points: a categorical component label, then a Cholesky-coloured normal."""
    if int(count) != count or count < 1:
        raise InvalidInputError(f"count must be a positive integer, got {count}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    labels = rng.choice(mix.n_components, size=int(count), p=mix.weights)
    z = rng.standard_normal((int(count), mix.dim))
    return mix.means[labels] + np.einsum("nij,nj->ni", mix._chol[labels], z)


def log_density(mix: GaussianMixture, x):
    return mix.log_density(x)


def grad_log_density(mix: GaussianMixture, x):
    return mix.grad_log_density(x)


def delta_ell(mix: GaussianMixture, pert: Perturbation, x):
    """Directional derivative of the log density along the mean shifts.

    scale * sum_c r_c(x) (Sigma_c^{-1}(x - mu_c)) . shift_c
    """
    pert.check(mix)
    x, single = mix._points(x)
    logs, white = mix._component_terms(x)
    r = np.exp(logs - logsumexp(logs, axis=1, keepdims=True))
    out = pert.scale * np.einsum("nk,nki,ki->n", r, white, pert.mean_shifts)
    return float(out[0]) if single else out


def expected_delta_ell(mix: GaussianMixture, pert: Perturbation) -> float:
    """E_p[delta_ell] for a mean perturbation of a normalised mixture.

    Each component contributes w_c E_c[Sigma_c^{-1}(x - mu_c)] . shift_c and the
    inner expectation vanishes, so the value is exactly zero.
    """
    pert.check(mix)
    return 0.0


def delta_p(mix: GaussianMixture, pert: Perturbation, x):
    """Analytic density perturbation p(x) (delta_ell(x) - E_p[delta_ell])."""
    return mix.density(x) * (delta_ell(mix, pert, x) - expected_delta_ell(mix, pert))
