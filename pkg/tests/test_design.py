from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from equidesign import (
    Design,
    DesignError,
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


def degree_oracle(design: Design) -> Counter:
    return Counter(int(v) for row in design.blocks for v in row)


def all_pairs(n: int) -> set:
    return set(itertools.combinations(range(1, n + 1), 2))


# -- modular helpers -------------------------------------------------------

@pytest.mark.parametrize("b, n, expected", [(7, 7, 7), (0, 5, 5), (-1, 5, 4), (12, 5, 2), (1, 1, 1)])
def test_mod_relabel(b, n, expected):
    assert mod_relabel(b, n) == expected


@pytest.mark.parametrize("n, expected", [(1, 1), (37, 36), (36, 12)])
def test_totient_examples(n, expected):
    assert euler_totient(n) == expected


@given(st.integers(min_value=1, max_value=3000))
def test_totient_matches_gcd_scan(n):
    assert euler_totient(n) == sum(1 for a in range(1, n + 1) if math.gcd(a, n) == 1)


def test_coprime_generators_first_coprimes():
    assert coprime_generators(800, 5) == [1, 3, 7, 9, 11]
    assert coprime_generators(37, 4) == [1, 2, 3, 4]
    with pytest.raises(DesignError):
        coprime_generators(10, 5)


# -- Algorithm for even n --------------------------------------------------

def test_even_n6_r2_classes():
    d = construct_even(6, 2)
    assert d.as_set() == {(1, 6), (2, 5), (3, 4), (2, 6), (1, 3), (4, 5)}
    # generation order: first class, then the second
    assert [tuple(b) for b in d.blocks[:3]] == [(1, 6), (2, 5), (3, 4)]


def test_even_trivial_and_complete():
    assert construct_even(2, 1).as_set() == {(1, 2)}
    d = construct_even(8, 7)
    assert d.size == 28 and d.as_set() == all_pairs(8)


@pytest.mark.parametrize("n, r", [(5, 2), (6, 0), (6, 6), (0, 1)])
def test_even_rejects(n, r):
    with pytest.raises(DesignError):
        construct_even(n, r)


@pytest.mark.parametrize("n", [4, 6, 10, 16, 30])
def test_even_full_partition_is_complete(n):
    assert construct_even(n, n - 1).as_set() == all_pairs(n)


# -- Algorithm for odd n ---------------------------------------------------

def test_odd_examples():
    assert construct_odd(7, 2).as_set() == {(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (1, 7)}
    assert construct_odd(5, 2).as_set() == {(1, 2), (2, 3), (3, 4), (4, 5), (1, 5)}
    d = construct_odd(7, 6)
    assert d.size == 21 and d.as_set() == all_pairs(7)


@pytest.mark.parametrize("n, r", [(6, 2), (7, 3), (7, 0), (7, 8), (1, 2)])
def test_odd_rejects(n, r):
    with pytest.raises(DesignError):
        construct_odd(n, r)


@pytest.mark.parametrize("n", [3, 5, 9, 15, 31])
def test_odd_full_partition_is_complete(n):
    assert construct_odd(n, n - 1).as_set() == all_pairs(n)


@pytest.mark.parametrize("n, r1, r2", [(10, 3, 9), (12, 1, 11), (9, 2, 8), (11, 4, 6)])
def test_prefix_closure(n, r1, r2):
    big = equireplicate_design(n, r2)
    small = equireplicate_design(n, r1)
    np.testing.assert_array_equal(big.blocks[: small.size], small.blocks)


@given(st.integers(min_value=1, max_value=60).flatmap(
    lambda h: st.tuples(st.just(2 * h), st.integers(min_value=1, max_value=2 * h - 1))))
@settings(max_examples=60, deadline=None)
def test_even_degrees_oracle(nr):
    n, r = nr
    d = construct_even(n, r)
    deg = degree_oracle(d)
    assert set(deg) == set(range(1, n + 1)) and set(deg.values()) == {r}
    assert d.size == n * r // 2 and not d.has_duplicate_blocks()


@given(st.integers(min_value=1, max_value=60).flatmap(
    lambda h: st.tuples(st.just(2 * h + 1), st.integers(min_value=1, max_value=h).map(lambda q: 2 * q))))
@settings(max_examples=60, deadline=None)
def test_odd_degrees_oracle(nr):
    n, r = nr
    d = construct_odd(n, r)
    deg = degree_oracle(d)
    assert set(deg) == set(range(1, n + 1)) and set(deg.values()) == {r}
    assert d.size == n * r // 2 and not d.has_duplicate_blocks()


# -- cyclic construction ---------------------------------------------------

def test_cyclic_n37():
    d = construct_cyclic(3, (1, 2, 4), 37, 3)
    assert d.size == 37
    expected = {tuple(sorted(mod_relabel(i + o, 37) for o in (0, 1, 3))) for i in range(37)}
    assert d.as_set() == expected
    assert set(degree_oracle(d).values()) == {3}


def test_cyclic_threshold_boundary():
    with pytest.raises(DesignError):
        construct_cyclic(3, (1, 2, 4), 36, 3)
    assert construct_cyclic(3, (1, 2, 4), 37, 3).size == 37


def test_cyclic_unchecked_collision_detected():
    # at n = 7 the g = 2 orbit of {0, 2, 6} contains {1, 3, 0}, a g = 1 block
    with pytest.raises(DesignError):
        construct_cyclic(3, (1, 2, 4), 7, 6, enforce_threshold=False)


def test_cyclic_k4_n101():
    # 101 is below the size condition 3*8*7 = 168, which is only sufficient
    with pytest.raises(DesignError):
        construct_cyclic(4, (1, 2, 4, 8), 101, 8)
    d = construct_cyclic(4, (1, 2, 4, 8), 101, 8, enforce_threshold=False)
    assert d.size == 202
    assert set(degree_oracle(d).values()) == {8}
    assert len(d.as_set()) == 202


@pytest.mark.parametrize("args", [
    (3, (1, 2, 4), 40, 4),        # r not a multiple of k
    (3, (1, 2, 4), 40, 0),
    (3, (1, 4, 2), 100, 3),       # eta not increasing
    (3, (1, 2), 100, 3),          # eta length != k
    (3, (1, 2, 4), 38, 3 * 19),   # r/k > phi(38) = 18
])
def test_cyclic_rejects(args):
    with pytest.raises(DesignError):
        construct_cyclic(*args)


def test_cyclic_generator_repair_recorded():
    d = construct_cyclic(4, (1, 2, 4, 8), 180, 16)
    assert d.meta["generators"] == [1, 7, 11, 13]
    assert d.meta["generator_set_repaired"] is True
    report = verify_equireplicate(d)
    assert report.ok and report.r == 16
    assert any("coprime" in note for note in report.notes)
    prime = construct_cyclic(4, (1, 2, 4, 8), 181, 16)
    assert prime.meta["generators"] == [1, 2, 3, 4] and not prime.meta["generator_set_repaired"]


@given(st.integers(min_value=37, max_value=400), st.integers(min_value=1, max_value=8))
@settings(max_examples=60, deadline=None)
def test_cyclic_equireplicate_and_distinct(n, q):
    q = min(q, euler_totient(n))
    d = construct_cyclic(3, (1, 2, 4), n, 3 * q)
    assert set(degree_oracle(d).values()) == {3 * q}
    assert len(d.as_set()) == d.size == n * q


# -- disjoint and dispatch -------------------------------------------------

def test_disjoint():
    assert construct_disjoint(9, 3).as_set() == {(1, 2, 3), (4, 5, 6), (7, 8, 9)}
    assert construct_disjoint(2, 2).as_set() == {(1, 2)}
    d = construct_disjoint(12, 4)
    flat = d.blocks.ravel()
    assert d.size == 3 and sorted(flat) == list(range(1, 13))
    with pytest.raises(DesignError):
        construct_disjoint(10, 3)


def test_equireplicate_dispatch():
    assert equireplicate_design(10, 3).kind == "even"
    assert equireplicate_design(11, 4).kind == "odd"
    assert equireplicate_design(200, 8, k=4).kind == "cyclic"
    assert equireplicate_design(200, 1, k=4).kind == "disjoint"


@pytest.mark.parametrize("target, n, k, expected", [
    (6.68, 800, 2, 7), (0.2, 10, 2, 1), (100, 10, 2, 9),
    (5.0, 11, 2, 6), (4.9, 11, 2, 4), (1.0, 11, 2, 2), (50, 11, 2, 10),
    (44.7, 800, 4, 44), (1.2, 800, 4, 1), (2.6, 800, 4, 4),
])
def test_nearest_admissible(target, n, k, expected):
    assert nearest_admissible_r(target, n, k) == expected


# -- random designs --------------------------------------------------------

def test_random_forces_complete():
    d = sample_random_design(4, 2, 6, mode="without", seed=3)
    assert d.as_set() == all_pairs(4)


def test_random_deterministic_and_distinct():
    a = sample_random_design(100, 2, 100, mode="without", seed=7)
    b = sample_random_design(100, 2, 100, mode="without", seed=7)
    np.testing.assert_array_equal(a.blocks, b.blocks)
    assert len(a.as_set()) == 100
    c = sample_random_design(100, 2, 100, mode="without", seed=8)
    assert not np.array_equal(a.blocks, c.blocks)


def test_random_with_replacement():
    d = sample_random_design(10, 3, 5, mode="with", seed=1)
    assert d.size == 5 and d.kind == "random-with"
    assert np.all((d.blocks >= 1) & (d.blocks <= 10))
    # many draws from few candidates must repeat
    assert sample_random_design(4, 3, 50, mode="with", seed=2).has_duplicate_blocks()


def test_random_rejects_too_many():
    with pytest.raises(DesignError):
        sample_random_design(5, 2, 11, mode="without", seed=0)


def test_random_dense_uniformity():
    # every pair should be hit with roughly equal frequency across seeds
    counts = Counter()
    for s in range(300):
        counts.update(sample_random_design(6, 2, 3, mode="without", seed=s).as_set())
    freq = np.array(list(counts.values())) / 300
    assert len(counts) == 15 and np.all(np.abs(freq - 3 / 15) < 0.08)


# -- verification and I/O --------------------------------------------------

def test_verify_examples():
    assert verify_equireplicate(construct_even(6, 2)).r == 2
    star = Design(4, 2, [[1, 2], [1, 3], [1, 4]])
    rep = verify_equireplicate(star)
    assert not rep.ok
    assert rep.offending == [(1, 3)]
    assert "index 1 has degree 3" in rep.describe()
    assert verify_equireplicate(construct_disjoint(9, 3)).r == 1


def test_design_validation():
    with pytest.raises(DesignError):
        Design(4, 2, [[1, 5]])
    with pytest.raises(DesignError):
        Design(4, 2, [[2, 1]])
    with pytest.raises(DesignError):
        Design(4, 2, [[1, 2]], r=2)


def test_round_trip(tmp_path):
    d = construct_cyclic(3, (1, 2, 4), 37, 6)
    path = tmp_path / "d.txt"
    write_design(d, path)
    assert path.read_text().splitlines()[0] == "37 3 6"
    back = read_design(path)
    np.testing.assert_array_equal(back.blocks, d.blocks)
    assert back.r == 6


def test_read_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("4 2 2\n1 2\n3 4\n")
    with pytest.raises(DesignError):
        read_design(path)
    path.write_text("4 2\n1 2\n")
    with pytest.raises(DesignError):
        read_design(path)
