"""
Permutation-free and permutation-based tests on incomplete U-statistics.

The permutation-free (PF) test standardizes the statistic with the
disjoint-block variance estimate and calibrates it against the standard
normal.  The permutation-based (PB) test recomputes the statistic on the
same design under random relabelings of the data.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy.special import ndtr

from .dataset import Dataset, as_dataset
from .design import Design, DesignError, verify_equireplicate
from .kernels import HSICKernel, Kernel, MMDKernel
from .streams import substream
from .ustat import estimate_sigma_k, evaluate, standardize_degenerate

__all__ = [
    "TestReport",
    "normal_cdf",
    "ks_distance_to_normal",
    "pf_test",
    "pb_test",
    "permute_dataset",
]


@dataclass
class TestReport:
    """Outcome of a single PF or PB test."""

    __test__ = False  # keep pytest from collecting this class

    method: str
    statistic: float
    p_value: float
    alpha: float
    reject: bool
    design: dict[str, Any]
    kernel: dict[str, Any]
    variance: float | None = None
    variance_kind: str | None = None
    z: float | None = None
    mu0: float | None = None
    B: int | None = None
    seed: int | None = None
    problem: str | None = None
    duration: float = 0.0
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def bandwidth(self) -> float | None:
        return _find_bandwidth(self.kernel)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["bandwidth"] = self.bandwidth
        return out


def _find_bandwidth(desc: dict) -> float | None:
    if "bandwidth" in desc:
        return desc["bandwidth"]
    for key in ("base", "base_x", "base_y"):
        if key in desc:
            bw = _find_bandwidth(desc[key])
            if bw is not None:
                return bw
    return None


def normal_cdf(z):
    """Standard normal CDF, accurate to about 1e-16 absolute.

    Scalars go through ``math.erfc``; arrays through ``scipy.special.ndtr``.
    """
    if np.ndim(z) == 0:
        return 0.5 * math.erfc(-float(z) / math.sqrt(2.0))
    return ndtr(np.asarray(z, dtype=float))


def ks_distance_to_normal(samples) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF and the standard normal.

    Evaluated exactly at the order statistics:
    ``max_i max(i/m - Phi(x_(i)), Phi(x_(i)) - (i-1)/m)``.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    m = x.size
    if m == 0:
        raise ValueError("no samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    cdf = ndtr(x)
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - cdf), np.max(cdf - (i - 1) / m)))


def _replication(design: Design) -> int:
    if design.r is not None:
        return design.r
    report = verify_equireplicate(design)
    if not report.ok:
        raise DesignError("the PF test needs an equireplicate design; " + report.describe())
    return int(report.r)


def pf_test(
    data,
    kernel: Kernel,
    design: Design,
    alpha: float = 0.05,
    mu0: float = 0.0,
) -> TestReport:
    """Permutation-free one-sided test of ``E h = mu0`` against ``E h > mu0``.

    ``z = sqrt(n r / k) (U - mu0) / s_k`` with ``s_k**2`` the unbiased
    variance of the kernel over disjoint blocks; ``p = 1 - Phi(z)``.  When
    k does not divide n the estimator uses the largest multiple of k rows.
    """
    start = time.perf_counter()
    data = as_dataset(data)
    r = _replication(design)
    k = design.k
    used = data.head(design.n)
    res = evaluate(design, used, kernel)
    m = design.n - design.n % k
    s2 = estimate_sigma_k(used.head(m), kernel)
    if not s2 > 0:
        raise ValueError("kernel values are constant over the disjoint blocks; the PF test is undefined")
    s_k = math.sqrt(s2)
    z = float(standardize_degenerate(res.value, mu0, design.n, r, k, s_k))
    p = 1.0 - normal_cdf(z)
    return TestReport(
        method="PF",
        statistic=res.value,
        p_value=p,
        alpha=alpha,
        reject=bool(p <= alpha),
        design=design.descriptor(),
        kernel=kernel.describe(),
        variance=s2,
        variance_kind="estimated",
        z=z,
        mu0=mu0,
        duration=time.perf_counter() - start,
    )


def _infer_problem(kernel: Kernel, problem: str | None) -> str:
    if problem is not None:
        if problem not in ("two-sample", "independence"):
            raise ValueError(f"unknown problem {problem!r}")
        return problem
    if isinstance(kernel, MMDKernel):
        return "two-sample"
    if isinstance(kernel, HSICKernel):
        return "independence"
    raise ValueError("cannot infer the permutation scheme for this kernel; pass problem=")


def permute_dataset(data: Dataset, rng: np.random.Generator, problem: str) -> Dataset:
    """Relabel paired data as the null hypothesis allows.

    ``two-sample``: pool the 2n observations, shuffle and re-split into x and
    y.  ``independence``: shuffle the y rows against the x rows.
    """
    if not data.is_paired:
        raise ValueError("permutation tests need paired observations (x, y)")
    x, y = data.x, data.y
    n = data.n
    if problem == "two-sample":
        if x.shape[1] != y.shape[1]:
            raise ValueError("two-sample pooling needs equal x and y dimensions")
        pooled = np.vstack([x, y])[rng.permutation(2 * n)]
        return Dataset(np.hstack([pooled[:n], pooled[n:]]), split=data.split)
    if problem == "independence":
        return Dataset(np.hstack([x, y[rng.permutation(n)]]), split=data.split)
    raise ValueError(f"unknown problem {problem!r}")


def pb_test(
    data,
    kernel: Kernel,
    design: Design,
    alpha: float = 0.05,
    B: int = 1000,
    seed: int = 0,
    problem: str | None = None,
) -> TestReport:
    """Permutation-based test on a fixed design.

    ``p = (1 + #{b : U_b >= U_obs}) / (B + 1)`` where ``U_b`` is the statistic
    on the b-th relabeled dataset (substream ``(seed, b)``).
    """
    if B < 1:
        raise ValueError(f"B must be >= 1, got {B}")
    start = time.perf_counter()
    problem = _infer_problem(kernel, problem)
    used = as_dataset(data).head(design.n)
    u_obs = evaluate(design, used, kernel).value
    exceed = 0
    for b in range(B):
        perm = permute_dataset(used, substream(seed, b), problem)
        if evaluate(design, perm, kernel).value >= u_obs:
            exceed += 1
    p = (1 + exceed) / (B + 1)
    return TestReport(
        method="PB",
        statistic=u_obs,
        p_value=p,
        alpha=alpha,
        reject=bool(p <= alpha),
        design=design.descriptor(),
        kernel=kernel.describe(),
        B=B,
        seed=seed,
        problem=problem,
        duration=time.perf_counter() - start,
        extra={"exceedances": exceed},
    )
