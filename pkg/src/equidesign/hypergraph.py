"""
Hypergraph diagnostics of a design and the normal-approximation bounds
that depend on them.

The design hypergraph has the indices as vertices and the blocks as
hyperedges.  Its line graph connects two blocks when they share an index;
following the convention used here every block is adjacent to itself, so
line-graph degrees count the self-loop unless ``include_loops=False``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .design import Design

__all__ = [
    "DegreeProfile",
    "IntersectionProfile",
    "ProfileTooLarge",
    "degree_profile",
    "line_graph_degrees",
    "line_graph_max_degree",
    "intersection_profile",
    "is_linear",
    "be_bound_deterministic",
    "be_bound_equireplicate",
    "be_bound_equi_linear",
    "variance_bounds",
]

DEFAULT_PROFILE_CAP = 20_000


class ProfileTooLarge(RuntimeError):
    """The design is above the intersection-profile size cap.

    Use the closed-form variance routines for large equireplicate designs.
    """


@dataclass(frozen=True)
class DegreeProfile:
    degrees: np.ndarray
    max_degree: int
    min_degree: int
    avg_degree: float

    def summary(self) -> dict:
        return {
            "min": self.min_degree,
            "max": self.max_degree,
            "mean": self.avg_degree,
            "total_incidences": int(self.degrees.sum()),
        }


@dataclass(frozen=True)
class IntersectionProfile:
    """``f[c]`` = number of ordered block pairs sharing exactly ``c`` indices."""

    f: np.ndarray

    @property
    def k(self) -> int:
        return len(self.f) - 1

    @property
    def total(self) -> int:
        return int(self.f.sum())

    def as_list(self) -> list[int]:
        return [int(v) for v in self.f]


def degree_profile(design: Design) -> DegreeProfile:
    degrees = np.bincount(design.blocks.ravel(), minlength=design.n + 1)[1:]
    return DegreeProfile(
        degrees=degrees,
        max_degree=int(degrees.max()),
        min_degree=int(degrees.min()),
        avg_degree=design.size * design.k / design.n,
    )


def _incidence(design: Design) -> sp.csr_matrix:
    m, k = design.blocks.shape
    rows = np.repeat(np.arange(m), k)
    cols = design.blocks.ravel() - 1
    data = np.ones(m * k, dtype=np.int32)
    return sp.csr_matrix((data, (rows, cols)), shape=(m, design.n))


def _overlap(design: Design) -> sp.csr_matrix:
    # entry (i, j) is |S_i & S_j|; only intersecting pairs are stored
    inc = _incidence(design)
    return (inc @ inc.T).tocsr()


def line_graph_degrees(design: Design, include_loops: bool = True) -> np.ndarray:
    """Degree of every block in the line graph of the design hypergraph."""
    deg = np.diff(_overlap(design).indptr)
    return deg if include_loops else deg - 1


def line_graph_max_degree(design: Design, include_loops: bool = True) -> int:
    """Maximum line-graph degree.

    Bounded by ``Delta(D) <= value <= k*(Delta(D) - 1) + 1`` (self-loop
    included), with the upper bound attained by equireplicate linear designs.
    """
    if design.size == 0:
        return 0
    return int(line_graph_degrees(design, include_loops).max())


def _profile_brute(design: Design) -> np.ndarray:
    m, k = design.blocks.shape
    member = np.zeros((m, design.n + 1), dtype=bool)
    member[np.arange(m)[:, None], design.blocks] = True
    f = np.zeros(k + 1, dtype=np.int64)
    for i in range(m):
        shared = member[i][design.blocks].sum(axis=1)
        f += np.bincount(shared, minlength=k + 1)
    return f


def _profile_sparse(design: Design) -> np.ndarray:
    m, k = design.blocks.shape
    values = _overlap(design).data
    f = np.bincount(values, minlength=k + 1).astype(np.int64)
    f[0] = m * m - len(values)
    return f


def intersection_profile(
    design: Design,
    method: str = "sparse",
    max_blocks: int | None = DEFAULT_PROFILE_CAP,
) -> IntersectionProfile:
    """Counts of ordered block pairs by intersection size.

    ``method="sparse"`` reads intersection sizes off the product of the
    block-index incidence matrix with its transpose; ``method="brute"``
    scans all ``|D|**2`` pairs.  Both refuse designs larger than
    ``max_blocks`` (pass ``None`` to lift the cap).
    """
    if max_blocks is not None and design.size > max_blocks:
        raise ProfileTooLarge(
            f"|D| = {design.size} exceeds the cap of {max_blocks} blocks; "
            "use the closed-form variance for equireplicate designs"
        )
    if method == "sparse":
        f = _profile_sparse(design)
    elif method == "brute":
        f = _profile_brute(design)
    else:
        raise ValueError(f"unknown method {method!r}")
    return IntersectionProfile(f)


def is_linear(design: Design) -> bool:
    """True iff any two distinct blocks share at most one index."""
    if design.size < 2:
        return True
    ov = _overlap(design)
    ov.setdiag(0)
    ov.eliminate_zeros()
    return ov.nnz == 0 or int(ov.data.max()) <= 1


def _check_moment_inputs(p: float, theta: float, sigma_k: float) -> None:
    if not 2 < p <= 3:
        raise ValueError(f"moment exponent p must lie in (2, 3], got {p}")
    if not sigma_k > 0 or not math.isfinite(sigma_k):
        raise ValueError(f"sigma_k must be positive and finite, got {sigma_k}")
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")


def _be_prefactor(k: int, n: int, delta: float, dbar: float, p: float) -> float:
    return 75.0 * (k * (delta - 1) + 1) ** (5 * (p - 1)) * (k / (n * dbar)) ** (p / 2 - 1)


def be_bound_deterministic(
    *, k: int, n: int, delta: float, dbar: float, p: float, theta: float, sigma_k: float
) -> float:
    """Berry-Esseen bound for the standardized incomplete U-statistic of any design.

    ``75 * (k(delta-1)+1)**(5(p-1)) * (k/(n*dbar))**(p/2-1) * theta / sigma_k**p``
    where ``delta``/``dbar`` are the maximum/average index degrees, ``theta``
    bounds the p-th absolute central moment of the kernel and ``sigma_k`` is
    its standard deviation.
    """
    _check_moment_inputs(p, theta, sigma_k)
    return _be_prefactor(k, n, delta, dbar, p) * theta / (sigma_k * sigma_k) ** (p / 2)


def be_bound_equireplicate(
    *, k: int, n: int, r: float, p: float, theta: float, sigma_k: float
) -> float:
    """The deterministic bound with ``delta = dbar = r``."""
    return be_bound_deterministic(k=k, n=n, delta=r, dbar=r, p=p, theta=theta, sigma_k=sigma_k)


def be_bound_equi_linear(
    *, k: int, n: int, r: float, p: float, theta: float, sigma_k: float, sigma_1: float
) -> float:
    """Sharper bound for equireplicate linear designs.

    The denominator becomes ``(k(r-1) sigma_1**2 + sigma_k**2)**(p/2)``; with
    ``sigma_1 = 0`` this reduces to :func:`be_bound_equireplicate`.
    """
    _check_moment_inputs(p, theta, sigma_k)
    if sigma_1 < 0:
        raise ValueError(f"sigma_1 must be non-negative, got {sigma_1}")
    denom = k * (r - 1) * (sigma_1 * sigma_1) + sigma_k * sigma_k
    return _be_prefactor(k, n, r, r, p) * theta / denom ** (p / 2)


def variance_bounds(
    *, k: int, n: int, dbar: float, delta: float, sigma_k: float
) -> tuple[float, float]:
    """Lower and (strict) upper bounds on the variance of an incomplete U-statistic.

    The lower bound ``k sigma_k**2 / (n dbar) = sigma_k**2/|D|`` is attained
    when the kernel is degenerate of order k-1.
    """
    if not sigma_k > 0 or not math.isfinite(sigma_k):
        raise ValueError(f"sigma_k must be positive and finite, got {sigma_k}")
    s2 = sigma_k * sigma_k
    lower = k * s2 / (n * dbar)
    upper = k * (k * (delta - 1) + 1) * s2 / (n * dbar)
    return lower, upper
