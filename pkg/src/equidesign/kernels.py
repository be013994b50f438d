"""
Kernels of order k evaluated block-wise on a dataset.

Every kernel implements ``block_values(data, idx)``, which returns
``h(X_S)`` for each row ``S`` of the 0-based index array ``idx`` of shape
``(m, k)``.  Base kernels (linear, Gaussian) act on two observation
vectors and double as order-2 kernels; the MMD and HSIC kernels combine a
base kernel over paired observations ``z = (x, y)``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.spatial.distance import pdist

from .dataset import Dataset, as_dataset

__all__ = [
    "Kernel",
    "BaseKernel",
    "LinearKernel",
    "GaussianKernel",
    "FunctionKernel",
    "MMDKernel",
    "HSICKernel",
    "linear_kernel",
    "gaussian_kernel",
    "median_heuristic",
    "mmd_pair_kernel",
    "hsic_quad_kernel",
]

_PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
# the three perfect matchings of {0,1,2,3}, as positions in _PAIRS
_MATCHINGS = [(0, 5), (1, 4), (2, 3)]


class Kernel:
    """Symmetric kernel of order ``order``."""

    order: int = 2
    paired: bool = False
    name: str = "kernel"

    def block_values(self, data: Dataset, idx: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"name": self.name, "order": self.order}

    def __call__(self, *points) -> float:
        if len(points) != self.order:
            raise ValueError(f"{self.name} takes {self.order} arguments, got {len(points)}")
        if self.paired:
            data = Dataset.paired([np.atleast_1d(p[0]) for p in points],
                                  [np.atleast_1d(p[1]) for p in points])
        else:
            data = Dataset(np.array([np.atleast_1d(p) for p in points], dtype=float))
        idx = np.arange(self.order)[None, :]
        return float(self.block_values(data, idx)[0])


class BaseKernel(Kernel):
    """Order-2 kernel on observation vectors."""

    def pair(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Row-wise kernel values for two ``(m, d)`` arrays."""
        raise NotImplementedError

    def block_values(self, data, idx):
        X = as_dataset(data).values
        return self.pair(X[idx[:, 0]], X[idx[:, 1]])


class LinearKernel(BaseKernel):
    name = "linear"

    def pair(self, a, b):
        if a.shape[1:] != b.shape[1:]:
            raise ValueError(f"dimension mismatch: {a.shape[1:]} vs {b.shape[1:]}")
        return np.einsum("ij,ij->i", a, b)


class GaussianKernel(BaseKernel):
    """``exp(-|a - b|**2 / (2 * bandwidth**2))``."""

    name = "gaussian"

    def __init__(self, bandwidth: float):
        if not bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {bandwidth}")
        self.bandwidth = float(bandwidth)

    def pair(self, a, b):
        if a.shape[1:] != b.shape[1:]:
            raise ValueError(f"dimension mismatch: {a.shape[1:]} vs {b.shape[1:]}")
        diff = a - b
        sq = np.einsum("ij,ij->i", diff, diff)
        return np.exp(sq * (-0.5 / (self.bandwidth * self.bandwidth)))

    def describe(self):
        return {"name": self.name, "order": 2, "bandwidth": self.bandwidth}


class FunctionKernel(Kernel):
    """Wrap a vectorized callable ``func(a_1, ..., a_k) -> (m,)``.

    Each ``a_j`` is the ``(m, d)`` array of the j-th block members.  The
    callable must be symmetric in its arguments.
    """

    def __init__(self, func: Callable[..., np.ndarray], order: int, name: str = "function"):
        self.func = func
        self.order = order
        self.name = name

    def block_values(self, data, idx):
        X = as_dataset(data).values
        out = self.func(*(X[idx[:, j]] for j in range(self.order)))
        return np.asarray(out, dtype=float).reshape(len(idx))


class MMDKernel(Kernel):
    """``h(z1, z2) = k(x1,x2) + k(y1,y2) - k(x1,y2) - k(y1,x2)``.

    Its mean is the squared MMD between the x and y distributions; under
    equal distributions it is degenerate (zero conditional mean).
    """

    order = 2
    paired = True
    name = "mmd"

    def __init__(self, base: BaseKernel):
        self.base = base

    def block_values(self, data, idx):
        if not data.is_paired:
            raise ValueError("the MMD kernel needs paired observations (x, y)")
        X, Y = data.x, data.y
        if X.shape[1] != Y.shape[1]:
            raise ValueError(f"x and y dimensions differ: {X.shape[1]} vs {Y.shape[1]}")
        i, j = idx[:, 0], idx[:, 1]
        x1, x2, y1, y2 = X[i], X[j], Y[i], Y[j]
        k = self.base.pair
        return k(x1, x2) + k(y1, y2) - k(x1, y2) - k(y1, x2)

    def describe(self):
        return {"name": self.name, "order": 2, "base": self.base.describe()}


class HSICKernel(Kernel):
    """Symmetrized fourth-order HSIC core.

    The average over all 24 orderings ``(t, u, v, w)`` of
    ``k_tu l_tu + k_tu l_vw - 2 k_tu l_tv``, evaluated here from the six
    pairwise values of each base kernel:

        h = S1/6 + S2/6 - S3/12

    with ``S1 = sum_{a<b} K_ab L_ab``, ``S2`` the sum over the three perfect
    matchings ``{ab|cd}`` of ``K_ab L_cd + K_cd L_ab`` and
    ``S3 = sum_a (sum_{b!=a} K_ab)(sum_{c!=a} L_ac) - 2 S1``.
    """

    order = 4
    paired = True
    name = "hsic"

    def __init__(self, base_x: BaseKernel, base_y: BaseKernel):
        self.base_x = base_x
        self.base_y = base_y

    def block_values(self, data, idx):
        if not data.is_paired:
            raise ValueError("the HSIC kernel needs paired observations (x, y)")
        X, Y = data.x, data.y
        cols = [idx[:, a] for a in range(4)]
        K = [self.base_x.pair(X[cols[a]], X[cols[b]]) for a, b in _PAIRS]
        L = [self.base_y.pair(Y[cols[a]], Y[cols[b]]) for a, b in _PAIRS]

        s1 = sum(K[p] * L[p] for p in range(6))
        s2 = sum(K[p] * L[q] + K[q] * L[p] for p, q in _MATCHINGS)
        s3 = -2.0 * s1
        for a in range(4):
            touching = [p for p, pair in enumerate(_PAIRS) if a in pair]
            s3 = s3 + sum(K[p] for p in touching) * sum(L[p] for p in touching)
        return s1 / 6.0 + s2 / 6.0 - s3 / 12.0

    def describe(self):
        return {
            "name": self.name,
            "order": 4,
            "base_x": self.base_x.describe(),
            "base_y": self.base_y.describe(),
        }


def linear_kernel(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def gaussian_kernel(a, b, bandwidth: float) -> float:
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.exp(-np.dot(d, d) / (2.0 * bandwidth * bandwidth)))


def median_heuristic(points) -> float:
    """Median pairwise Euclidean distance of a pooled sample.

    Zero distances from duplicated points are dropped only if they drag the
    median to zero.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) < 2:
        raise ValueError("median heuristic needs at least two points")
    dist = pdist(pts)
    med = float(np.median(dist))
    if med == 0.0:
        positive = dist[dist > 0]
        if positive.size == 0:
            raise ValueError("all points are identical; bandwidth undefined")
        med = float(np.median(positive))
    return med


def mmd_pair_kernel(base: BaseKernel) -> MMDKernel:
    return MMDKernel(base)


def hsic_quad_kernel(base_x: BaseKernel, base_y: BaseKernel) -> HSICKernel:
    return HSICKernel(base_x, base_y)
