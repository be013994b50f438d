"""
Construction, sampling, verification and serialization of designs.

A design is a collection of k-subsets (blocks) of the index set
``{1, ..., n}``.  Indices are 1-based throughout, and each block is stored
sorted ascending.  Blocks are kept in generation order so that the
prefix-closure of the equireplicate constructions can be checked directly;
use :meth:`Design.canonical` for order-free comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

__all__ = [
    "Design",
    "DesignError",
    "EquireplicateReport",
    "mod_relabel",
    "euler_totient",
    "coprime_generators",
    "construct_even",
    "construct_odd",
    "construct_cyclic",
    "construct_disjoint",
    "equireplicate_design",
    "nearest_admissible_r",
    "sample_random_design",
    "verify_equireplicate",
    "write_design",
    "read_design",
]

INDEX_DTYPE = np.int64


class DesignError(ValueError):
    """Raised for inadmissible construction parameters or malformed designs."""


@dataclass(frozen=True, eq=False)
class Design:
    """An incomplete-U-statistic design.

    Parameters
    ----------
    n : int
        Sample size; blocks draw indices from ``1..n``.
    k : int
        Block size (order of the U-statistic).
    blocks : (m, k) array_like of int
        Blocks in generation order, each strictly increasing.
    r : int, optional
        Declared replication parameter, if any.
    kind : str
        Name of the construction that produced the design.
    meta : dict
        Free-form construction metadata (e.g. cyclic generators).
    """

    n: int
    k: int
    blocks: np.ndarray
    r: int | None = None
    kind: str = "custom"
    meta: dict[str, Any] = field(default_factory=dict)
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        blocks = np.ascontiguousarray(self.blocks, dtype=INDEX_DTYPE)
        if blocks.ndim != 2:
            blocks = blocks.reshape(-1, self.k)
        blocks.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)
        if self.n < 1 or self.k < 1:
            raise DesignError(f"need n >= 1 and k >= 1, got n={self.n}, k={self.k}")
        if blocks.shape[1] != self.k:
            raise DesignError(f"blocks have width {blocks.shape[1]}, expected k={self.k}")
        if self.check:
            self.validate()

    def validate(self) -> None:
        """Check index range and strict ordering inside every block."""
        b = self.blocks
        if b.size == 0:
            return
        if b.min() < 1 or b.max() > self.n:
            raise DesignError(f"block index outside 1..{self.n}")
        if self.k > 1 and not np.all(b[:, 1:] > b[:, :-1]):
            raise DesignError("blocks must be strictly increasing k-tuples")
        if self.r is not None and len(b) * self.k != self.n * self.r:
            raise DesignError(
                f"|D|*k = {len(b) * self.k} does not equal n*r = {self.n * self.r}"
            )

    @property
    def size(self) -> int:
        return int(self.blocks.shape[0])

    def __len__(self) -> int:
        return self.size

    def canonical(self) -> np.ndarray:
        """Blocks sorted lexicographically."""
        order = np.lexsort(self.blocks.T[::-1])
        return self.blocks[order]

    def as_set(self) -> set[tuple[int, ...]]:
        return {tuple(int(v) for v in row) for row in self.blocks}

    def has_duplicate_blocks(self) -> bool:
        if self.size < 2:
            return False
        c = self.canonical()
        return bool(np.any(np.all(c[1:] == c[:-1], axis=1)))

    def prefix(self, size: int) -> Design:
        """The first ``size`` blocks, as an undeclared design."""
        return Design(self.n, self.k, self.blocks[:size], kind=self.kind, check=False)

    def descriptor(self) -> dict[str, Any]:
        out = {"kind": self.kind, "n": self.n, "k": self.k, "r": self.r, "size": self.size}
        if "generators" in self.meta:
            out["generators"] = list(self.meta["generators"])
        if "eta" in self.meta:
            out["eta"] = list(self.meta["eta"])
        return out


def mod_relabel(b: int, n: int) -> int:
    """``b mod n`` on the labels ``{1, ..., n}`` (a zero remainder maps to n)."""
    if n < 1:
        raise DesignError("modulus must be positive")
    rem = b % n
    return n if rem == 0 else rem


def euler_totient(n: int) -> int:
    """Euler's totient by trial-division factorization."""
    if n < 1:
        raise DesignError("totient defined for n >= 1")
    result = n
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            result -= result // p
        p += 1
    if m > 1:
        result -= result // m
    return result


def coprime_generators(n: int, count: int) -> list[int]:
    """The ``count`` smallest integers in ``1..n`` coprime to ``n``."""
    gens = []
    a = 1
    while len(gens) < count and a <= n:
        if math.gcd(a, n) == 1:
            gens.append(a)
        a += 1
    if len(gens) < count:
        raise DesignError(f"only {len(gens)} integers in 1..{n} are coprime to {n}")
    return gens


def _check_int(name: str, value: Any) -> int:
    if isinstance(value, (bool, np.bool_)) or int(value) != value:
        raise DesignError(f"{name} must be an integer, got {value!r}")
    return int(value)


def construct_even(n: int, r: int) -> Design:
    """r-equireplicate pair design for even ``n`` and any ``1 <= r <= n-1``.

    Class ``g`` (for ``g = 1..r``) is the perfect matching made of the pair
    ``(g, n)`` and the pairs ``(g+i, g-i)`` taken modulo ``n-1`` on the labels
    ``1..n-1``, ``i = 1..n/2-1``.  The classes are disjoint, so the first r
    of them form an r-equireplicate design of size ``n*r/2``.
    """
    n = _check_int("n", n)
    r = _check_int("r", r)
    if n < 2 or n % 2:
        raise DesignError(f"construct_even needs an even n >= 2, got {n}")
    if not 1 <= r <= n - 1:
        raise DesignError(f"r must lie in [1, {n - 1}], got {r}")
    half = n // 2
    m = n - 1
    out = np.empty((r, half, 2), dtype=INDEX_DTYPE)
    for g in range(1, r + 1):
        up = np.arange(g + 1, g + half, dtype=INDEX_DTYPE)
        up[up > m] -= m
        down = np.arange(g - 1, g - half, -1, dtype=INDEX_DTYPE)
        down[down < 1] += m
        cls = out[g - 1]
        cls[0, 0] = g
        cls[0, 1] = n
        np.minimum(up, down, out=cls[1:, 0])
        np.maximum(up, down, out=cls[1:, 1])
    return Design(n, 2, out.reshape(-1, 2), r=r, kind="even", check=False)


def construct_odd(n: int, r: int) -> Design:
    """r-equireplicate pair design for odd ``n`` and even ``2 <= r <= n-1``.

    Class ``g`` (for ``g = 1..r/2``) is the n-cycle ``(i, i+g mod n)``.
    """
    n = _check_int("n", n)
    r = _check_int("r", r)
    if n < 3 or n % 2 == 0:
        raise DesignError(f"construct_odd needs an odd n >= 3, got {n}")
    if r % 2:
        raise DesignError(f"no r-equireplicate pair design exists for odd n and odd r={r}")
    if not 2 <= r <= n - 1:
        raise DesignError(f"r must lie in [2, {n - 1}], got {r}")
    out = np.empty((r // 2, n, 2), dtype=INDEX_DTYPE)
    base = np.arange(1, n + 1, dtype=INDEX_DTYPE)
    for g in range(1, r // 2 + 1):
        other = base + g
        other[other > n] -= n
        cls = out[g - 1]
        np.minimum(base, other, out=cls[:, 0])
        np.maximum(base, other, out=cls[:, 1])
    return Design(n, 2, out.reshape(-1, 2), r=r, kind="odd", check=False)


def construct_cyclic(
    k: int, eta: Sequence[int], n: int, r: int, *, enforce_threshold: bool = True
) -> Design:
    """Cyclic r-equireplicate design of block size ``k > 2``.

    Each generator ``g`` contributes the n blocks
    ``{i + g*(eta[j] - eta[0]) mod n : j}`` for ``i = 0..n-1``, which together
    cover every index exactly k times.  Generators are the r/k smallest
    integers coprime to n; distinct generators give disjoint classes as long
    as ``n > 3*eta[-1]*(eta[-1] - eta[0])``.

    That size condition is sufficient, not necessary.  With
    ``enforce_threshold=False`` smaller n are attempted and the output is
    checked directly (valid blocks, no repeated block, equal degrees).
    """
    k = _check_int("k", k)
    n = _check_int("n", n)
    r = _check_int("r", r)
    eta = [_check_int("eta", e) for e in eta]
    if k <= 2:
        raise DesignError(f"construct_cyclic needs k > 2, got {k}")
    if len(eta) != k:
        raise DesignError(f"eta must have length k={k}, got {len(eta)}")
    if eta[0] < 0 or any(b <= a for a, b in zip(eta, eta[1:])):
        raise DesignError(f"eta must be strictly increasing and non-negative, got {eta}")
    threshold = 3 * eta[-1] * (eta[-1] - eta[0])
    if n <= threshold and enforce_threshold:
        raise DesignError(f"n must exceed 3*eta[k-1]*(eta[k-1]-eta[0]) = {threshold}, got {n}")
    if r < k or r % k:
        raise DesignError(f"r must be a positive multiple of k={k}, got {r}")
    q = r // k
    phi = euler_totient(n)
    if q > phi:
        raise DesignError(f"r/k = {q} exceeds phi({n}) = {phi}")

    gens = coprime_generators(n, q)
    # the set {a <= r/k : gcd(a, n) = 1} differs from gens when some a <= r/k shares a factor with n
    small_coprimes = [a for a in range(1, q + 1) if math.gcd(a, n) == 1]
    diffs = np.asarray([e - eta[0] for e in eta], dtype=INDEX_DTYPE)
    i = np.arange(n, dtype=INDEX_DTYPE)[:, None]
    out = np.empty((q, n, k), dtype=INDEX_DTYPE)
    for c, g in enumerate(gens):
        offsets = (g * diffs) % n
        cls = out[c]
        np.add(i, offsets[None, :], out=cls)
        cls[cls >= n] -= n
        cls[cls == 0] = n
        cls.sort(axis=1)
    meta = {
        "generators": gens,
        "eta": eta,
        "generator_set_repaired": small_coprimes != gens,
    }
    if n > threshold:
        return Design(n, k, out.reshape(-1, k), r=r, kind="cyclic", meta=meta, check=False)
    design = Design(n, k, out.reshape(-1, k), r=r, kind="cyclic", meta=meta)
    if design.has_duplicate_blocks() or not verify_equireplicate(design).ok:
        raise DesignError(f"generator classes collide at n={n} (below the size condition {threshold})")
    return design


def construct_disjoint(n: int, k: int) -> Design:
    """The 1-equireplicate design ``{(1..k), (k+1..2k), ...}``."""
    n = _check_int("n", n)
    k = _check_int("k", k)
    if k < 1 or n < k or n % k:
        raise DesignError(f"construct_disjoint needs k | n, got n={n}, k={k}")
    blocks = np.arange(1, n + 1, dtype=INDEX_DTYPE).reshape(-1, k)
    return Design(n, k, blocks, r=1, kind="disjoint", check=False)


def nearest_admissible_r(target: float, n: int, k: int = 2) -> int:
    """Round a requested replication to the nearest value the constructions accept.

    ``k = 2``: nearest integer in ``[1, n-1]`` for even n, nearest even integer
    in ``[2, n-1]`` for odd n.  ``k > 2``: ``1`` is kept as-is (served by the
    disjoint design), otherwise the nearest multiple of k in ``[k, k*phi(n)]``.
    """
    if not math.isfinite(target):
        raise DesignError(f"cannot round non-finite r={target}")
    if k == 2:
        if n % 2 == 0:
            return int(min(max(math.floor(target + 0.5), 1), n - 1))
        top = (n - 1) // 2 * 2
        return int(min(max(2 * math.floor(target / 2 + 0.5), 2), top))
    if math.floor(target + 0.5) <= 1:
        return 1
    top = k * euler_totient(n)
    return int(min(max(k * math.floor(target / k + 0.5), k), top))


def equireplicate_design(n: int, r: int, k: int = 2, eta: Sequence[int] | None = None) -> Design:
    """Dispatch to the construction that serves ``(n, r, k)``.

    ``eta`` defaults to ``(1, 2, 4, ..., 2**(k-1))`` for the cyclic case.
    """
    if k == 2:
        return construct_even(n, r) if n % 2 == 0 else construct_odd(n, r)
    if r == 1:
        return construct_disjoint(n, k)
    if n == k:
        raise DesignError("n == k admits only the single complete block (r = 1)")
    if eta is None:
        eta = [2**j for j in range(k)]
    return construct_cyclic(k, eta, n, r)


def _block_keys(blocks: np.ndarray, n: int) -> list:
    k = blocks.shape[1]
    if (n + 1) ** k < 2**62:
        weights = (n + 1) ** np.arange(k - 1, -1, -1, dtype=np.int64)
        return (blocks @ weights).tolist()
    return [tuple(row) for row in blocks.tolist()]


def _uniform_subsets(rng: np.random.Generator, n: int, k: int, count: int) -> np.ndarray:
    """``count`` independent uniform k-subsets of 1..n, each sorted."""
    if 2 * k > n:
        rows = np.argsort(rng.random((count, n)), axis=1)[:, :k] + 1
        rows.sort(axis=1)
        return rows.astype(INDEX_DTYPE)
    out = np.empty((0, k), dtype=INDEX_DTYPE)
    while len(out) < count:
        need = count - len(out)
        draw = rng.integers(1, n + 1, size=(need + need // 4 + 8, k), dtype=INDEX_DTYPE)
        draw.sort(axis=1)
        ok = np.all(draw[:, 1:] != draw[:, :-1], axis=1) if k > 1 else np.ones(len(draw), bool)
        out = np.concatenate([out, draw[ok]])
    return out[:count]


def sample_random_design(
    n: int,
    k: int,
    m: int,
    mode: str = "without",
    seed: int | np.random.Generator | None = None,
) -> Design:
    """Draw ``m`` blocks uniformly from all k-subsets of ``1..n``.

    ``mode="without"`` returns distinct blocks (rejection sampling against a
    set of already-drawn blocks; when more than half of all k-subsets are
    requested they are enumerated and subsampled instead).  ``mode="with"``
    draws the m blocks independently, so duplicates may occur.
    """
    n = _check_int("n", n)
    k = _check_int("k", k)
    m = _check_int("m", m)
    if m < 1:
        raise DesignError("m must be >= 1")
    if not 1 <= k <= n:
        raise DesignError(f"need 1 <= k <= n, got k={k}, n={n}")
    if mode not in ("with", "without"):
        raise DesignError(f"mode must be 'with' or 'without', got {mode!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    total = math.comb(n, k)

    if mode == "with":
        blocks = _uniform_subsets(rng, n, k, m)
        return Design(n, k, blocks, kind="random-with", check=False)

    if m > total:
        raise DesignError(f"cannot draw {m} distinct blocks from C({n},{k}) = {total}")
    if 2 * m > total and total <= 2_000_000:
        from itertools import combinations

        everything = np.fromiter(
            (v for c in combinations(range(1, n + 1), k) for v in c),
            dtype=INDEX_DTYPE,
            count=total * k,
        ).reshape(total, k)
        pick = rng.permutation(total)[:m]
        return Design(n, k, everything[pick], kind="random-without", check=False)

    seen: set = set()
    kept = []
    while len(kept) < m:
        cand = _uniform_subsets(rng, n, k, m - len(kept))
        for key, row in zip(_block_keys(cand, n), cand):
            if key not in seen:
                seen.add(key)
                kept.append(row)
                if len(kept) == m:
                    break
    return Design(n, k, np.asarray(kept, dtype=INDEX_DTYPE), kind="random-without", check=False)


@dataclass(frozen=True)
class EquireplicateReport:
    """Outcome of :func:`verify_equireplicate`.

    ``offending`` lists ``(index, degree)`` for every index whose degree
    differs from the most common degree.
    """

    ok: bool
    r: int | None
    min_degree: int
    max_degree: int
    offending: list[tuple[int, int]]
    declared_r: int | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def matches_declared(self) -> bool:
        return self.declared_r is None or (self.ok and self.r == self.declared_r)

    def __bool__(self) -> bool:
        return self.ok

    def describe(self, limit: int = 10) -> str:
        if self.ok:
            msg = f"equireplicate: r = {self.r}"
            if not self.matches_declared:
                msg += f" (declared r = {self.declared_r})"
        else:
            shown = ", ".join(f"index {v} has degree {d}" for v, d in self.offending[:limit])
            more = len(self.offending) - limit
            msg = (
                f"not equireplicate: degrees range over [{self.min_degree}, {self.max_degree}]; "
                + shown
                + (f"; ... {more} more" if more > 0 else "")
            )
        return "\n".join([msg, *self.notes])


def verify_equireplicate(design: Design) -> EquireplicateReport:
    """Check that every index of ``1..n`` occurs in the same number of blocks."""
    degrees = np.bincount(design.blocks.ravel(), minlength=design.n + 1)[1:]
    lo, hi = int(degrees.min()), int(degrees.max())
    notes = []
    if design.meta.get("generator_set_repaired"):
        notes.append(
            "note: some of 1..r/k share a factor with n; generators were taken as the "
            f"first r/k coprimes of n: {design.meta['generators']}"
        )
    if lo == hi:
        return EquireplicateReport(True, lo, lo, hi, [], design.r, notes)
    values, counts = np.unique(degrees, return_counts=True)
    mode = values[np.argmax(counts)]
    bad = np.flatnonzero(degrees != mode)
    offending = [(int(v) + 1, int(degrees[v])) for v in bad]
    return EquireplicateReport(False, None, lo, hi, offending, design.r, notes)


def write_design(design: Design, path: str | Path) -> None:
    """Write ``n k r`` then one block per line (``r = 0`` when undeclared)."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"{design.n} {design.k} {design.r or 0}\n")
        np.savetxt(fh, design.blocks, fmt="%d", delimiter=" ")


def read_design(path: str | Path) -> Design:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise DesignError(f"{path}: first line must be 'n k r'")
        n, k, r = (int(v) for v in header)
        rows = [line.split() for line in fh if line.strip()]
    blocks = np.asarray(rows, dtype=INDEX_DTYPE).reshape(-1, k)
    return Design(n, k, blocks, r=r or None, kind="file")
