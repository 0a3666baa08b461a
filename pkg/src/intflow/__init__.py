"""Integrable nonparametric flows for perturbed (unnormalised) densities."""

from ._accel import backend, set_backend, set_threads, use_backend
from .distributions import (
    GaussianMixture,
    Perturbation,
    SampleSet,
    delta_ell,
    delta_p,
    grad_log_density,
    log_density,
    sample,
)
from .flow import (
    FlowField,
    apply_flow,
    clip_flow,
    continuity_residual,
    estimate_flow,
    estimate_flow_normalized,
)
from .griddiag import GridSpec, ScalarGrid, VectorGrid, evaluate_on_grid, kde, kde_difference, median_filter
from .kernels import (
    coulomb_kernel,
    coulomb_kernel_2d,
    greens_function,
    rbf_kernel,
    rbf_kernel_derivatives,
)
from .ksd import KsdResult, ksd_ustat, median_bandwidth

__version__ = "0.1.0"
