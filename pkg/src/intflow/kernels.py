"""Green's functions, Coulomb potentials and RBF kernels.

``greens_function`` is the field of a unit point charge in n dimensions,
``x / (S_{n-1} |x|^n)`` with ``S_{n-1}`` the surface area of the unit
(n-1)-sphere. The potentials ``coulomb_kernel`` (n >= 3) and the logarithmic
``coulomb_kernel_2d`` are positive near the charge, so with the charge at z

    greens_function(x - z) = grad_z k(x, z) = -grad_x k(x, z).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import SingularInputError, UnsupportedDimensionError


def _check_dim(n: int) -> int:
    if int(n) != n or n < 2:
        raise UnsupportedDimensionError(f"dimension must be an integer >= 2, got {n}")
    return int(n)


@lru_cache(maxsize=None)
def greens_constant(n: int) -> float:
    """Gamma(n/2) / (2 pi^(n/2)), the inverse surface area of the unit (n-1)-sphere."""
    n = _check_dim(n)
    return math.gamma(0.5 * n) / (2.0 * math.pi ** (0.5 * n))


def _as_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise SingularInputError("non-finite input")
    return x


def _separation(x, z) -> tuple[np.ndarray, float]:
    x = _as_vector(x)
    z = _as_vector(z)
    if x.shape != z.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {z.shape}")
    d = x - z
    r = float(np.sqrt(d @ d))
    if r == 0.0:
        raise SingularInputError("kernel evaluated at coincident points")
    return d, r


def greens_function(x, dim: int | None = None) -> np.ndarray:
    x = _as_vector(x)
    n = _check_dim(x.size if dim is None else dim)
    if x.size != n:
        raise ValueError(f"vector of length {x.size} given for dimension {n}")
    r2 = float(x @ x)
    if r2 == 0.0:
        raise SingularInputError("Green's function is singular at the origin")
    return greens_constant(n) * x / r2 ** (0.5 * n)


def coulomb_kernel(x, z, dim: int | None = None) -> float:
    d, r = _separation(x, z)
    n = _check_dim(d.size if dim is None else dim)
    if n == 2:
        raise UnsupportedDimensionError(
            "coulomb_kernel divides by n - 2; use coulomb_kernel_2d in two dimensions"
        )
    return greens_constant(n) / ((n - 2) * r ** (n - 2))


def coulomb_kernel_2d(x, z) -> float:
    """Logarithmic potential -log|x - z| / (2 pi), the n = 2 member of the Coulomb family."""
    d, r = _separation(x, z)
    if d.size != 2:
        raise UnsupportedDimensionError("coulomb_kernel_2d takes 2-vectors")
    return -math.log(r) / (2.0 * math.pi)


def potential(x, z) -> float:
    """Coulomb potential in any dimension >= 2, dispatching on the vector length."""
    if np.size(x) == 2:
        return coulomb_kernel_2d(x, z)
    return coulomb_kernel(x, z)


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not (np.isfinite(sigma) and sigma > 0):
        raise ValueError(f"bandwidth must be positive and finite, got {sigma}")
    return sigma


def rbf_kernel(x, y, sigma: float) -> float:
    x = _as_vector(x)
    y = _as_vector(y)
    sigma = _check_sigma(sigma)
    d = x - y
    return float(np.exp(-(d @ d) / (2.0 * sigma * sigma)))


def rbf_kernel_derivatives(x, y, sigma: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Return ``(grad_x k, grad_y k, trace of the mixed Hessian d/dx d/dy k)``."""
    x = _as_vector(x)
    y = _as_vector(y)
    sigma = _check_sigma(sigma)
    d = x - y
    r2 = float(d @ d)
    s2 = sigma * sigma
    k = math.exp(-r2 / (2.0 * s2))
    grad_y = d / s2 * k
    trace = (x.size / s2 - r2 / (s2 * s2)) * k
    return -grad_y, grad_y, trace
