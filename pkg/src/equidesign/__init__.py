"""Equireplicate designs for incomplete U-statistics and kernel tests built on them."""

from __future__ import annotations

from .dataset import Dataset, as_dataset
from .design import (
    Design,
    DesignError,
    EquireplicateReport,
    construct_cyclic,
    construct_disjoint,
    construct_even,
    construct_odd,
    coprime_generators,
    equireplicate_design,
    euler_totient,
    mod_relabel,
    nearest_admissible_r,
    read_design,
    sample_random_design,
    verify_equireplicate,
    write_design,
)
from .hypergraph import (
    DegreeProfile,
    IntersectionProfile,
    ProfileTooLarge,
    be_bound_deterministic,
    be_bound_equi_linear,
    be_bound_equireplicate,
    degree_profile,
    intersection_profile,
    is_linear,
    line_graph_degrees,
    line_graph_max_degree,
    variance_bounds,
)
from .inference import TestReport, ks_distance_to_normal, normal_cdf, pb_test, pf_test
from .kernels import (
    BaseKernel,
    FunctionKernel,
    GaussianKernel,
    HSICKernel,
    Kernel,
    LinearKernel,
    MMDKernel,
    gaussian_kernel,
    hsic_quad_kernel,
    linear_kernel,
    median_heuristic,
    mmd_pair_kernel,
)
from .streams import substream
from .ustat import (
    UStatResult,
    estimate_sigma_k,
    evaluate,
    kernel_values,
    mc_statistics,
    mc_variance,
    standardize_degenerate,
    variance_equi_linear,
    variance_exact,
)

__version__ = "0.1.0"
