from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Dataset", "as_dataset"]


@dataclass(frozen=True, eq=False)
class Dataset:
    """n observations stored as rows of a 2-D float array.

    Paired data (two-sample or independence problems) stores each row as the
    concatenation ``(x_i, y_i)``; ``split`` is the width of the x part.
    """

    values: np.ndarray
    split: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise ValueError("observations must form a 2-D array (n, d)")
        if not np.all(np.isfinite(v)):
            raise ValueError("observations contain missing or non-finite values")
        if self.split is not None and not 0 < self.split < v.shape[1]:
            raise ValueError(f"split {self.split} outside (0, {v.shape[1]})")
        object.__setattr__(self, "values", v)

    @classmethod
    def paired(cls, x, y) -> Dataset:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x = x[:, None] if x.ndim == 1 else x
        y = y[:, None] if y.ndim == 1 else y
        if len(x) != len(y):
            raise ValueError(
                f"paired samples need equal sizes, got {len(x)} and {len(y)}; "
                "truncate the longer sample to the common size"
            )
        return cls(np.hstack([x, y]), split=x.shape[1])

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def is_paired(self) -> bool:
        return self.split is not None

    @property
    def x(self) -> np.ndarray:
        return self.values if self.split is None else self.values[:, : self.split]

    @property
    def y(self) -> np.ndarray:
        if self.split is None:
            raise ValueError("dataset is not paired")
        return self.values[:, self.split :]

    def head(self, n: int) -> Dataset:
        return Dataset(self.values[:n], self.split)

    def take(self, rows: np.ndarray) -> Dataset:
        return Dataset(self.values[rows], self.split)


def as_dataset(data) -> Dataset:
    return data if isinstance(data, Dataset) else Dataset(np.asarray(data, dtype=float))
