from __future__ import annotations

import csv
import json
import math
import warnings

import numpy as np
import pytest
from scipy import stats

from equidesign import FunctionKernel, construct_even, ks_distance_to_normal
from equidesign.harness import (
    ExperimentConfig,
    _rate_ci,
    load_config,
    make_kernel,
    make_sampler,
    reference_ks_quantiles,
    resolve_r,
    run_bench_construct,
    run_ks_experiment,
    run_power_experiment,
    run_var_ratio_experiment,
    standardized_statistics,
    write_outputs,
)
from equidesign.streams import substream


@pytest.mark.parametrize("rule, n, k, expected", [
    ("log", 800, 2, 7),
    ("log2", 1024, 2, 48),
    ("log2", 800, 4, 44),
    ("log3", 100, 2, 98),
    ("n/2", 100, 2, 50),
    ("n/2", 101, 2, 50),
    ("n-1", 101, 2, 100),
    ("1", 101, 2, 2),
    ("1", 800, 4, 1),
    ("12", 100, 2, 12),
])
def test_resolve_r(rule, n, k, expected):
    assert resolve_r(rule, n, k) == expected


def test_resolve_r_unknown():
    with pytest.raises(ValueError):
        resolve_r("sqrt", 100)


def test_config_defaults_and_paper_scale():
    desk = load_config("ks")
    assert desk.inner_reps == 200 and desk.outer_reps == 30 and not desk.paper_scale
    full = load_config("ks", paper_scale=True)
    assert full.inner_reps == 500 and full.outer_reps == 100 and 1600 in full.n_grid


def test_config_files_and_overrides(tmp_path):
    kv = tmp_path / "c.cfg"
    kv.write_text("# comment\nn_grid = 50, 60\nr-rules = log\ninner_reps = 20\nseed = 4\n")
    cfg = load_config("ks", kv, {"outer_reps": "3"})
    assert cfg.n_grid == [50, 60] and cfg.r_rules == ["log"] and cfg.outer_reps == 3 and cfg.seed == 4
    js = tmp_path / "c.json"
    js.write_text(json.dumps({"n_grid": [40], "r_rules": ["1", "log"], "inner_reps": 10, "paper_scale": True}))
    cfg = load_config("var-ratio", js)
    assert cfg.n_grid == [40] and cfg.inner_reps == 10 and cfg.outer_reps == 100


@pytest.mark.parametrize("bad", [
    {"n_grid": ""}, {"inner_reps": 1}, {"kernel": "cosine"}, {"scenario": "nope"},
    {"standardize": "zz"}, {"alpha": 1.5}, {"r_rules": "sqrt"}, {"bogus_key": 1},
])
def test_config_rejects(bad):
    with pytest.raises(ValueError):
        load_config("ks", overrides=bad)


def test_config_rejects_bad_line(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("n_grid 100\n")
    with pytest.raises(ValueError):
        load_config("ks", p)


def test_samplers():
    rng = substream(0, 1)
    assert make_sampler("single-normal", 30)(rng).values.shape == (30, 1)
    d = make_sampler("mixture-shift", 25)(rng)
    assert d.x.shape == (25, 64) and d.y.shape == (25, 64)
    d = make_sampler("mean-shift", 20000)(rng)
    assert abs(d.y.mean() - 2.0) < 0.05 and abs(d.x.mean()) < 0.05
    d = make_sampler("sine-dependence", 20000)(rng)
    # Var Y = 0.25 E[sin^2 X] + 0.75
    assert abs(d.y.var() - (0.25 * (1 - math.exp(-2)) / 2 + 0.75)) < 0.03
    assert np.corrcoef(d.x[:, 0], d.y[:, 0])[0, 1] > 0.2
    a = make_sampler("h0-same", 10)(substream(5, 2)).values
    b = make_sampler("h0-same", 10)(substream(5, 2)).values
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        make_sampler("nothing", 10)


def test_mixture_same_and_shift_share_layout():
    x_same = make_sampler("mixture-same", 4000)(substream(1, 1))
    x_shift = make_sampler("mixture-shift", 4000)(substream(1, 1))
    assert np.allclose(x_same.x, x_shift.x)
    assert np.linalg.norm(x_shift.x.mean(0) - x_shift.y.mean(0)) > np.linalg.norm(
        x_same.x.mean(0) - x_same.y.mean(0))


def test_make_kernel_specs():
    data = make_sampler("h0-same", 50)(substream(0, 0))
    assert make_kernel("mmd-linear").order == 2
    assert make_kernel("hsic-linear").order == 4
    g = make_kernel("mmd-gaussian", data)
    assert g.describe()["base"]["bandwidth"] > 0
    assert make_kernel("hsic-gaussian", data, bandwidth=2.0).describe()["base_y"]["bandwidth"] == 2.0
    with pytest.raises(ValueError):
        make_kernel("mmd-gaussian")
    with pytest.raises(ValueError):
        make_kernel("other")


def test_reference_quantiles_match_exact_ks_distribution():
    q50, q975 = reference_ks_quantiles(200, 4000, seed=3)
    assert q50 == pytest.approx(stats.kstwo.ppf(0.5, 200), rel=0.03)
    assert q975 == pytest.approx(stats.kstwo.ppf(0.975, 200), rel=0.05)


def test_constant_stream_warns_and_gives_half():
    d = construct_even(20, 3)
    zero = "xy"
    sampler = lambda rng: np.zeros((20, 1))  # noqa: E731
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        z = standardized_statistics(d, zero, sampler, 10, 0, (1,), "mc")
    assert any("constant" in str(w.message) for w in caught)
    assert ks_distance_to_normal(z) == 0.5


def test_ks_experiment_rows_and_reproducibility():
    cfg = load_config("ks", overrides=dict(n_grid=[40], r_rules=["1", "log"], inner_reps=30,
                                           outer_reps=3, reference_reps=200, seed=2))
    rows = run_ks_experiment(cfg)
    assert [r["r"] for r in rows] == [1, 4]
    for row in rows:
        assert 0 < row["mean_ks"] < 1 and row["q_half"] < row["q_975"]
        assert {"n", "r_rule", "ci_half_width", "seed", "stream_key"} <= set(row)
    assert run_ks_experiment(cfg) == rows


def test_ks_experiment_sk_standardization():
    cfg = load_config("ks", overrides=dict(n_grid=[64], r_rules=["log2"], kernel="xy",
                                           scenario="single-normal", inner_reps=50, outer_reps=2,
                                           standardize="sk", reference_reps=100))
    rows = run_ks_experiment(cfg)
    assert rows[0]["standardize"] == "sk" and rows[0]["mean_ks"] < 0.3


def test_ks_degenerate_mmd_contracts_below_reference():
    cfg = load_config("ks", overrides=dict(n_grid=[1600], r_rules=["log2"], inner_reps=200,
                                           outer_reps=8, reference_reps=1000, seed=11))
    row = run_ks_experiment(cfg)[0]
    assert row["mean_ks"] < row["q_975"]


def test_var_ratio_same_baseline_is_one():
    cfg = load_config("var-ratio", overrides=dict(n_grid=[30], r_rules=["2"], inner_reps=20,
                                                  outer_reps=3, baseline="same"))
    row = run_var_ratio_experiment(cfg)[0]
    assert row["ratio_mean"] == 1.0 and row["ci_low"] == row["ci_high"] == 1.0


def test_var_ratio_complete_design_is_one():
    cfg = load_config("var-ratio", overrides=dict(n_grid=[12], r_rules=["n-1"], inner_reps=20,
                                                  outer_reps=3))
    row = run_var_ratio_experiment(cfg)[0]
    assert row["ratio_mean"] == pytest.approx(1.0, rel=1e-9)


def test_power_experiment_rows():
    cfg = load_config("power", overrides=dict(n_grid=[40], r_rules=["log"], kernel="mmd-linear",
                                               scenarios=["h0-same", "mean-shift"], inner_reps=20,
                                               pb_reps=4, B=19))
    rows = run_power_experiment(cfg)
    assert {(r["scenario"], r["method"]) for r in rows} == {
        ("h0-same", "PF"), ("h0-same", "PB"), ("mean-shift", "PF"), ("mean-shift", "PB")}
    for row in rows:
        assert row["ci_low"] <= row["rejection_rate"] <= row["ci_high"]
        assert row["runtime_mean"] > 0
    shift_pf = next(r for r in rows if r["scenario"] == "mean-shift" and r["method"] == "PF")
    assert shift_pf["rejection_rate"] == 1.0


def test_power_grows_with_r():
    cfg = load_config("power", overrides=dict(n_grid=[200], r_rules=["log", "log2"], kernel="hsic-linear",
                                               scenarios=["sine-dependence"], inner_reps=150,
                                               methods="pf", seed=5))
    rows = {r["r_rule"]: r for r in run_power_experiment(cfg)}
    assert rows["log2"]["rejection_rate"] >= rows["log"]["ci_low"]
    assert rows["log2"]["rejection_rate"] > rows["log"]["rejection_rate"]


def test_rate_ci():
    lo, hi = _rate_ci(2, 50, "auto")
    ci = stats.binomtest(2, 50).proportion_ci(method="exact")
    assert (lo, hi) == pytest.approx((ci.low, ci.high))
    lo, hi = _rate_ci(25, 50, "normal")
    assert hi - 0.5 == pytest.approx(1.959963984540054 * math.sqrt(0.25 / 50))


def test_bench_small():
    cfg = load_config("bench", overrides=dict(n_grid=[1000, 2001], r_grid=[4, 8],
                                               algorithms="even,odd,cyclic", inner_reps=2))
    rows, extra = run_bench_construct(cfg)
    assert len(rows) == 12 and all(r["verified"] for r in rows)
    assert {r["n"] % 2 for r in rows if r["kind"] == "even"} == {0}
    assert {r["n"] % 2 for r in rows if r["kind"] == "odd"} == {1}
    assert set(extra["linear_fit"]) == {"even", "odd", "cyclic"}


def test_write_outputs(tmp_path):
    cfg = ExperimentConfig(kind="ks", n_grid=[10], r_rules=["1"])
    rows = [{"n": 10, "value": 0.5}, {"n": 20, "value": 0.25, "extra": 1}]
    csv_path, json_path = write_outputs(rows, cfg, tmp_path / "out", "ks")
    with csv_path.open() as fh:
        read = list(csv.DictReader(fh))
    assert read[0]["n"] == "10" and read[1]["extra"] == "1"
    meta = json.loads(json_path.read_text())
    assert meta["config"]["n_grid"] == [10] and meta["rows"] == 2
