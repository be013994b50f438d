"""
Incomplete U-statistics: evaluation, variances and standardization.

The statistic for a design ``D`` of k-subsets of ``1..n`` is the average of
the kernel over the blocks of ``D``.  Block values are summed with
``math.fsum`` (correctly rounded), so the result does not depend on how the
blocks are chunked.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from itertools import chain
from typing import Callable

import numpy as np

from .dataset import Dataset, as_dataset
from .design import Design
from .hypergraph import IntersectionProfile
from .kernels import Kernel
from .streams import substream

__all__ = [
    "UStatResult",
    "VARIANCE_KINDS",
    "kernel_values",
    "evaluate",
    "variance_exact",
    "variance_equi_linear",
    "estimate_sigma_k",
    "standardize_degenerate",
    "mc_statistics",
    "mc_variance",
]

VARIANCE_KINDS = ("exact", "closed_form", "estimated", "monte_carlo")

# floats materialized per chunk of kernel arguments
_CHUNK_FLOATS = 1 << 22


@dataclass(frozen=True)
class UStatResult:
    value: float
    design_size: int
    kernel_eval_count: int
    variance: float | None = None
    variance_kind: str | None = None

    def __post_init__(self):
        if self.variance_kind is not None and self.variance_kind not in VARIANCE_KINDS:
            raise ValueError(f"unknown variance kind {self.variance_kind!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def _check_compatible(design: Design, data: Dataset, kernel: Kernel) -> None:
    if kernel.order != design.k:
        raise ValueError(f"kernel order {kernel.order} does not match design k = {design.k}")
    if design.n > data.n:
        raise ValueError(f"design indexes 1..{design.n} but the dataset has {data.n} rows")


def _chunks(design: Design, data: Dataset):
    m = design.size
    step = max(1024, _CHUNK_FLOATS // max(1, design.k * data.dim))
    for start in range(0, m, step):
        yield design.blocks[start : start + step] - 1


def kernel_values(design: Design, data, kernel: Kernel) -> np.ndarray:
    """Kernel value of every block, in design order."""
    data = as_dataset(data)
    _check_compatible(design, data, kernel)
    if design.size == 0:
        return np.empty(0)
    return np.concatenate([kernel.block_values(data, idx) for idx in _chunks(design, data)])


def evaluate(design: Design, data, kernel: Kernel) -> UStatResult:
    """``|D|**-1 * sum over blocks S of h(X_S)``."""
    data = as_dataset(data)
    _check_compatible(design, data, kernel)
    m = design.size
    if m == 0:
        raise ValueError("empty design")
    parts = (kernel.block_values(data, idx).tolist() for idx in _chunks(design, data))
    total = math.fsum(chain.from_iterable(parts))
    return UStatResult(value=total / m, design_size=m, kernel_eval_count=m)


def variance_exact(profile, sigma, design_size: int) -> float:
    """``|D|**-2 * sum_c f_c sigma_c**2`` from an intersection profile.

    Parameters
    ----------
    profile : IntersectionProfile or sequence of int
        ``f_0, ..., f_k``.
    sigma : sequence of float
        ``sigma_0**2, ..., sigma_k**2`` (variances, not standard deviations);
        ``sigma_0**2`` must be 0.
    design_size : int
        ``|D|``; ``sum(f)`` must equal ``|D|**2``.
    """
    f = profile.f if isinstance(profile, IntersectionProfile) else np.asarray(profile)
    s = np.asarray(sigma, dtype=float)
    if len(f) != len(s):
        raise ValueError(f"profile has {len(f)} entries but sigma has {len(s)}")
    if s[0] != 0.0:
        raise ValueError("sigma_0**2 must be 0 (blocks sharing no index are independent)")
    if np.any(s < 0):
        raise ValueError("variance components must be non-negative")
    if int(np.sum(f)) != design_size * design_size:
        raise ValueError(f"sum of profile {int(np.sum(f))} != |D|**2 = {design_size**2}")
    return math.fsum(float(fc) * sc for fc, sc in zip(f, s)) / (design_size * design_size)


def variance_equi_linear(n: int, k: int, r: int, sigma1_sq: float, sigmak_sq: float) -> float:
    """Variance under an r-equireplicate linear design.

    ``(k**2 (r-1) sigma_1**2 + k sigma_k**2) / (n r)``; for ``k = 2`` this is
    ``(2(r-1) sigma_1**2 + sigma_2**2) / |D|``.
    """
    if sigma1_sq < 0 or sigmak_sq < 0:
        raise ValueError("variance components must be non-negative")
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    return (k * k * (r - 1) * sigma1_sq + k * sigmak_sq) / (n * r)


def estimate_sigma_k(data, kernel: Kernel) -> float:
    """Unbiased sample variance of the kernel over disjoint consecutive blocks.

    Blocks are ``(1..k), (k+1..2k), ...``; the row count must be a multiple
    of k with at least two blocks.
    """
    data = as_dataset(data)
    k = kernel.order
    if data.n % k:
        raise ValueError(f"n = {data.n} is not a multiple of k = {k}; trim the dataset first")
    if data.n // k < 2:
        raise ValueError("need at least two disjoint blocks to estimate the variance")
    idx = np.arange(data.n).reshape(-1, k)
    values = kernel.block_values(data, idx)
    return float(np.var(values, ddof=1))


def standardize_degenerate(U, mu, n: int, r: int, k: int, s_k: float):
    """``sqrt(n r / k) * (U - mu) / s_k`` where ``s_k`` is a standard deviation."""
    if not s_k > 0:
        raise ValueError(f"s_k must be positive, got {s_k}")
    scale = math.sqrt(n * r / k) / s_k
    if np.ndim(U):
        return scale * (np.asarray(U, dtype=float) - mu)
    return scale * (U - mu)


def mc_statistics(
    design: Design,
    kernel: Kernel,
    sampler: Callable[[np.random.Generator], object],
    reps: int,
    seed: int,
) -> np.ndarray:
    """Statistic values over ``reps`` datasets drawn by ``sampler(rng)``.

    Replicate ``i`` uses the substream keyed by ``(seed, i)``.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    return np.array(
        [evaluate(design, sampler(substream(seed, i)), kernel).value for i in range(reps)]
    )


def mc_variance(
    design: Design,
    kernel: Kernel,
    sampler: Callable[[np.random.Generator], object],
    reps: int,
    seed: int,
) -> float:
    """Sample variance of the statistic across independently drawn datasets."""
    if reps < 2:
        raise ValueError(f"reps must be >= 2, got {reps}")
    return float(np.var(mc_statistics(design, kernel, sampler, reps, seed), ddof=1))
