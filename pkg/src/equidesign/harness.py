"""
Seeded Monte Carlo experiments: normal approximation quality (KS distance),
variance efficiency of equireplicate designs against random designs,
power and level of the PF/PB tests, and construction timing.

Every replicate draws from the substream keyed by
``(seed, experiment, n, rule, outer, inner)``, so results do not depend on
the order in which cells or replicates are run.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
import warnings
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

import numpy as np
from scipy import stats

from .dataset import Dataset
from .design import (
    Design,
    construct_cyclic,
    construct_even,
    construct_odd,
    equireplicate_design,
    nearest_admissible_r,
    sample_random_design,
    verify_equireplicate,
)
from .inference import ks_distance_to_normal, pb_test, pf_test
from .kernels import (
    FunctionKernel,
    GaussianKernel,
    HSICKernel,
    Kernel,
    LinearKernel,
    MMDKernel,
    median_heuristic,
)
from .streams import substream
from .ustat import estimate_sigma_k, evaluate, standardize_degenerate

__all__ = [
    "ExperimentConfig",
    "load_config",
    "resolve_r",
    "make_sampler",
    "make_kernel",
    "kernel_order",
    "run_ks_experiment",
    "run_var_ratio_experiment",
    "run_power_experiment",
    "run_bench_construct",
    "run_experiment",
    "write_outputs",
    "SCENARIOS",
    "KERNEL_SPECS",
]

log = logging.getLogger(__name__)

SCENARIOS = (
    "h0-same",
    "mean-shift",
    "sine-dependence",
    "sine-independent",
    "mixture-same",
    "mixture-shift",
    "single-normal",
)
KERNEL_SPECS = ("mmd-linear", "mmd-gaussian", "hsic-linear", "hsic-gaussian", "xy", "sum")
R_RULES = ("log", "log2", "log3", "n/2", "n-1")
_EXPERIMENT_TAGS = {"ks": 1, "var-ratio": 2, "power": 3, "bench": 4}
_REFERENCE_TAG = 99

_DEFAULTS: dict[str, dict[str, Any]] = {
    "ks": dict(
        n_grid=[100, 200, 400, 800], r_rules=["1", "log", "log2", "log3"],
        kernel="mmd-linear", scenario="h0-same", inner_reps=200, outer_reps=30,
    ),
    "var-ratio": dict(
        n_grid=[100, 200, 400, 800], r_rules=["1", "log", "log2", "log3"],
        kernel="mmd-linear", scenario="mean-shift", inner_reps=200, outer_reps=30,
    ),
    "power": dict(
        n_grid=[100, 200, 400], r_rules=["log", "log2"],
        kernel="mmd-gaussian", scenarios=["mixture-same", "mixture-shift"],
        inner_reps=200, outer_reps=1, pb_reps=20, B=200,
    ),
    "bench": dict(
        n_grid=[100_000, 200_000], r_grid=[10, 20], algorithms=["even"],
        inner_reps=5, outer_reps=1,
    ),
}
_PAPER_SCALE: dict[str, dict[str, Any]] = {
    "ks": dict(n_grid=[100, 200, 400, 800, 1600],
               r_rules=["1", "log", "log2", "log3", "n/2", "n-1"],
               inner_reps=500, outer_reps=100),
    "var-ratio": dict(n_grid=[100, 200, 400, 800, 1600], inner_reps=500, outer_reps=100),
    "power": dict(n_grid=[100, 200, 400, 800, 1600], r_rules=["1", "log", "log2"],
                  inner_reps=500, pb_reps=500, B=1000),
    "bench": dict(n_grid=[100_000, 200_000, 400_000, 1_000_000], r_grid=[10, 20, 100]),
}


@dataclass
class ExperimentConfig:
    """Resolved settings for one experiment.

    List-valued fields accept comma-separated strings when read from a
    key=value file or the command line.
    """

    kind: str = "ks"
    n_grid: list[int] = field(default_factory=list)
    r_rules: list[str] = field(default_factory=list)
    r_grid: list[int] = field(default_factory=list)
    algorithms: list[str] = field(default_factory=list)
    kernel: str = "mmd-linear"
    bandwidth: float | None = None
    scenario: str = "h0-same"
    scenarios: list[str] = field(default_factory=list)
    dim: int | None = None
    inner_reps: int = 200
    outer_reps: int = 30
    reference_reps: int = 1000
    standardize: str = "mc"
    baseline: str = "random"
    methods: list[str] = field(default_factory=lambda: ["pf", "pb"])
    pb_reps: int | None = None
    alpha: float = 0.05
    B: int = 1000
    mu0: float = 0.0
    ci_method: str = "auto"
    eta: list[int] = field(default_factory=list)
    seed: int = 0
    out: str = "results"
    paper_scale: bool = False

    def validate(self) -> None:
        if self.kind not in _EXPERIMENT_TAGS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not self.n_grid:
            raise ValueError("n grid is empty")
        if self.kind != "bench":
            if not self.r_rules:
                raise ValueError("r rule list is empty")
            if self.kernel not in KERNEL_SPECS:
                raise ValueError(f"unknown kernel {self.kernel!r}; choose from {KERNEL_SPECS}")
            for sc in [self.scenario, *self.scenarios]:
                if sc not in SCENARIOS:
                    raise ValueError(f"unknown scenario {sc!r}; choose from {SCENARIOS}")
            k = kernel_order(self.kernel)
            for n in self.n_grid:
                for rule in self.r_rules:
                    resolve_r(rule, n, k)
        else:
            if not self.r_grid:
                raise ValueError("r grid is empty")
        if self.inner_reps < 2:
            raise ValueError("inner reps must be >= 2")
        if self.outer_reps < 1:
            raise ValueError("outer reps must be >= 1")
        if self.standardize not in ("mc", "sk"):
            raise ValueError("standardize must be 'mc' or 'sk'")
        if self.baseline not in ("random", "same"):
            raise ValueError("baseline must be 'random' or 'same'")
        if self.ci_method not in ("auto", "exact", "normal"):
            raise ValueError("ci_method must be auto, exact or normal")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.B < 1:
            raise ValueError("B must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _coerce(name: str, value: Any) -> Any:
    """Turn config strings into the type of field ``name``."""
    list_int = {"n_grid", "r_grid", "eta"}
    list_str = {"r_rules", "algorithms", "scenarios", "methods"}
    ints = {"dim", "inner_reps", "outer_reps", "reference_reps", "pb_reps", "B", "seed"}
    floats = {"alpha", "mu0", "bandwidth"}
    if value is None:
        return None
    if name in list_int or name in list_str:
        items = value if isinstance(value, (list, tuple)) else str(value).split(",")
        items = [str(v).strip() for v in items if str(v).strip()]
        return [int(float(v)) for v in items] if name in list_int else items
    if name in ints:
        return int(float(value))
    if name in floats:
        return float(value)
    if name == "paper_scale":
        return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
    return str(value)


def _parse_key_value(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def load_config(
    kind: str,
    path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
    paper_scale: bool = False,
) -> ExperimentConfig:
    """Build a config from kind defaults, an optional file and overrides.

    The file is JSON if it parses as such, else line-oriented ``key=value``.
    Precedence: overrides > file > paper-scale > desk defaults.
    """
    values: dict[str, Any] = {"kind": kind, **_DEFAULTS[kind]}
    from_file: dict[str, Any] = {}
    if path is not None:
        text = Path(path).read_text()
        try:
            from_file = json.loads(text)
        except json.JSONDecodeError:
            from_file = _parse_key_value(text)
        from_file = {k.replace("-", "_"): v for k, v in from_file.items()}
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    paper_scale = paper_scale or _coerce("paper_scale", from_file.get("paper_scale", False)) or bool(
        overrides.get("paper_scale", False)
    )
    if paper_scale:
        values.update(_PAPER_SCALE[kind])
        values["paper_scale"] = True
    values.update(from_file)
    values.update(overrides)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(**{k: _coerce(k, v) for k, v in values.items()})
    cfg.validate()
    return cfg


def resolve_r(rule: str | int, n: int, k: int = 2) -> int:
    """Replication for a rule, rounded to the nearest admissible value.

    Rules: an integer, ``log`` (ln n), ``log2`` ((ln n)**2), ``log3``
    ((ln n)**3), ``n/2`` and ``n-1``.
    """
    rule = str(rule).strip().replace("−", "-")
    ln = math.log(n)
    targets = {"log": ln, "log2": ln**2, "log3": ln**3, "n/2": n / 2, "n-1": n - 1}
    if rule in targets:
        target = targets[rule]
    else:
        try:
            target = float(rule)
        except ValueError:
            raise ValueError(f"unknown r rule {rule!r}; use an integer or one of {R_RULES}") from None
    return nearest_admissible_r(target, n, k)


_MIXTURE_DIM = 64
_MIXTURE_COMPONENTS = 10
_MIXTURE_LAYOUT_SEED = 20240601


def _mixture_means(dim: int) -> np.ndarray:
    rng = np.random.default_rng(_MIXTURE_LAYOUT_SEED)
    return 0.5 * rng.standard_normal((_MIXTURE_COMPONENTS, dim))


def _draw_mixture(rng: np.random.Generator, n: int, means: np.ndarray, comps: np.ndarray) -> np.ndarray:
    labels = comps[rng.integers(len(comps), size=n)]
    return means[labels] + rng.standard_normal((n, means.shape[1]))


def make_sampler(scenario: str, n: int, dim: int | None = None) -> Callable[[np.random.Generator], Dataset]:
    """Data generator ``rng -> Dataset`` with n (paired) observations.

    Scenarios
    ---------
    h0-same : x, y ~ N(0, I) independently
    mean-shift : x ~ N(0, I), y ~ N(2, I)
    sine-dependence : Y = 0.5 sin(X) + sqrt(3/4) E with X, E ~ N(0, 1)
    sine-independent : x, y ~ N(0, 1) independently
    mixture-same : x and y from the same 64-d Gaussian mixture
    mixture-shift : x and y from two mixtures sharing some components
    single-normal : unpaired x ~ N(0, I)
    """
    if scenario.startswith("mixture"):
        d = dim or _MIXTURE_DIM
        means = _mixture_means(d)
        first = np.arange(0, 7)
        second = first if scenario == "mixture-same" else np.arange(3, 10)
        if scenario not in ("mixture-same", "mixture-shift"):
            raise ValueError(f"unknown scenario {scenario!r}")

        def sample(rng):
            return Dataset.paired(_draw_mixture(rng, n, means, first), _draw_mixture(rng, n, means, second))

        return sample
    d = dim or 1
    if scenario == "h0-same":
        return lambda rng: Dataset.paired(rng.standard_normal((n, d)), rng.standard_normal((n, d)))
    if scenario == "mean-shift":
        return lambda rng: Dataset.paired(rng.standard_normal((n, d)), 2.0 + rng.standard_normal((n, d)))
    if scenario == "sine-dependence":
        def sample(rng):
            x = rng.standard_normal(n)
            e = rng.standard_normal(n)
            return Dataset.paired(x, 0.5 * np.sin(x) + math.sqrt(0.75) * e)

        return sample
    if scenario == "sine-independent":
        return lambda rng: Dataset.paired(rng.standard_normal(n), rng.standard_normal(n))
    if scenario == "single-normal":
        return lambda rng: Dataset(rng.standard_normal((n, d)))
    raise ValueError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")


def kernel_order(spec: str) -> int:
    if spec.startswith("hsic"):
        return 4
    if spec in KERNEL_SPECS:
        return 2
    raise ValueError(f"unknown kernel {spec!r}; choose from {KERNEL_SPECS}")


def _product(a, b):
    return a[:, 0] * b[:, 0]


def _sum(a, b):
    return a[:, 0] + b[:, 0]


def make_kernel(spec: str, data: Dataset | None = None, bandwidth: float | None = None) -> Kernel:
    """Kernel from a spec string; Gaussian bandwidths default to the median heuristic on ``data``.

    For MMD the heuristic pools x then y; for HSIC each margin gets its own.
    """
    if spec == "xy":
        return FunctionKernel(_product, 2, name="xy")
    if spec == "sum":
        return FunctionKernel(_sum, 2, name="x+y")
    if spec == "mmd-linear":
        return MMDKernel(LinearKernel())
    if spec == "hsic-linear":
        return HSICKernel(LinearKernel(), LinearKernel())
    if spec in ("mmd-gaussian", "hsic-gaussian"):
        if bandwidth is None and data is None:
            raise ValueError("a Gaussian kernel needs a bandwidth or data for the median heuristic")
        if spec == "mmd-gaussian":
            bw = bandwidth or median_heuristic(np.vstack([data.x, data.y]))
            return MMDKernel(GaussianKernel(bw))
        bx = bandwidth or median_heuristic(data.x)
        by = bandwidth or median_heuristic(data.y)
        return HSICKernel(GaussianKernel(bx), GaussianKernel(by))
    raise ValueError(f"unknown kernel {spec!r}; choose from {KERNEL_SPECS}")


def _design_for(cfg: ExperimentConfig, n: int, r: int, k: int) -> Design:
    eta = cfg.eta or None
    return equireplicate_design(n, r, k, eta=eta)


def _cell_key(kind: str, n: int, rule: str) -> tuple[int, int, int]:
    return _EXPERIMENT_TAGS[kind], int(n), zlib.crc32(str(rule).encode())


def _mean_ci(values: np.ndarray) -> tuple[float, float]:
    """Mean and normal-approximation 95% CI half-width."""
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    if len(values) < 2:
        return mean, float("nan")
    return mean, float(1.959963984540054 * values.std(ddof=1) / math.sqrt(len(values)))


def _rate_ci(count: int, total: int, method: str = "auto") -> tuple[float, float]:
    """95% CI for a binomial proportion.

    ``auto`` switches to Clopper-Pearson when fewer than 10 successes or
    failures were observed.
    """
    if method == "auto":
        method = "exact" if min(count, total - count) < 10 else "normal"
    if method == "exact":
        ci = stats.binomtest(count, total).proportion_ci(confidence_level=0.95, method="exact")
        return float(ci.low), float(ci.high)
    p = count / total
    half = 1.959963984540054 * math.sqrt(p * (1 - p) / total)
    return max(0.0, p - half), min(1.0, p + half)


def reference_ks_quantiles(size: int, reps: int, seed: int) -> tuple[float, float]:
    """Median and 97.5% quantile of the KS distance of ``size`` true normal draws."""
    rng = substream(seed, _REFERENCE_TAG, size)
    draws = rng.standard_normal((reps, size))
    ks = np.array([ks_distance_to_normal(row) for row in draws])
    return float(np.quantile(ks, 0.5)), float(np.quantile(ks, 0.975))


def standardized_statistics(
    design: Design,
    kernel_spec: str,
    sampler: Callable[[np.random.Generator], Dataset],
    reps: int,
    seed: int,
    key: tuple[int, ...],
    standardize: str = "mc",
    mu0: float = 0.0,
    bandwidth: float | None = None,
) -> np.ndarray:
    """Standardized statistics of ``reps`` independent replicates.

    ``standardize="sk"`` divides each replicate by its own disjoint-block
    estimate; ``"mc"`` divides by the standard deviation of the replicates.
    """
    k = design.k
    r = design.r
    values = np.empty(reps)
    zs = np.empty(reps)
    for i in range(reps):
        data = sampler(substream(seed, *key, i))
        kernel = make_kernel(kernel_spec, data, bandwidth)
        values[i] = evaluate(design, data, kernel).value
        if standardize == "sk":
            m = design.n - design.n % k
            s2 = estimate_sigma_k(data.head(m), kernel)
            zs[i] = standardize_degenerate(values[i], mu0, design.n, r, k, math.sqrt(s2)) if s2 > 0 else 0.0
    if standardize == "sk":
        return zs
    sd = float(values.std(ddof=1))
    if not sd > 0:
        warnings.warn("statistic is constant across replicates; standardized values set to 0")
        return values - mu0
    return (values - mu0) / sd


def run_ks_experiment(cfg: ExperimentConfig) -> list[dict[str, Any]]:
    """KS distance to N(0, 1) of standardized statistics per (n, r rule)."""
    k = kernel_order(cfg.kernel)
    refs: dict[int, tuple[float, float]] = {}
    rows = []
    for n in cfg.n_grid:
        sampler = make_sampler(cfg.scenario, n, cfg.dim)
        for rule in cfg.r_rules:
            r = resolve_r(rule, n, k)
            design = _design_for(cfg, n, r, k)
            key = _cell_key("ks", n, rule)
            ks = np.empty(cfg.outer_reps)
            for o in range(cfg.outer_reps):
                z = standardized_statistics(
                    design, cfg.kernel, sampler, cfg.inner_reps, cfg.seed, (*key, o),
                    cfg.standardize, cfg.mu0, cfg.bandwidth,
                )
                ks[o] = ks_distance_to_normal(z)
            if cfg.inner_reps not in refs:
                refs[cfg.inner_reps] = reference_ks_quantiles(cfg.inner_reps, cfg.reference_reps, cfg.seed)
            q50, q975 = refs[cfg.inner_reps]
            mean, half = _mean_ci(ks)
            rows.append(dict(
                n=n, r_rule=rule, r=r, design_size=design.size, mean_ks=mean, ci_half_width=half,
                q_half=q50, q_975=q975, inner_reps=cfg.inner_reps, outer_reps=cfg.outer_reps,
                standardize=cfg.standardize, seed=cfg.seed, stream_key="/".join(map(str, key)),
            ))
            log.info("ks n=%d rule=%s r=%d mean=%.4f", n, rule, r, mean)
    return rows


def run_var_ratio_experiment(cfg: ExperimentConfig) -> list[dict[str, Any]]:
    """Ratio of MC variances: equireplicate design over a size-matched random design.

    Both arms see the same datasets.  With ``baseline="random"`` the random
    arm draws a fresh design without replacement for every replicate.
    """
    k = kernel_order(cfg.kernel)
    rows = []
    for n in cfg.n_grid:
        sampler = make_sampler(cfg.scenario, n, cfg.dim)
        for rule in cfg.r_rules:
            r = resolve_r(rule, n, k)
            design = _design_for(cfg, n, r, k)
            key = _cell_key("var-ratio", n, rule)
            ratios = np.empty(cfg.outer_reps)
            for o in range(cfg.outer_reps):
                u_eq = np.empty(cfg.inner_reps)
                u_rd = np.empty(cfg.inner_reps)
                for i in range(cfg.inner_reps):
                    rng = substream(cfg.seed, *key, o, i)
                    data = sampler(rng)
                    kernel = make_kernel(cfg.kernel, data, cfg.bandwidth)
                    u_eq[i] = evaluate(design, data, kernel).value
                    if cfg.baseline == "same":
                        u_rd[i] = u_eq[i]
                    else:
                        seed_i = int(rng.integers(2**63))
                        rand = sample_random_design(n, k, design.size, mode="without", seed=seed_i)
                        u_rd[i] = evaluate(rand, data, kernel).value
                ratios[o] = u_eq.var(ddof=1) / u_rd.var(ddof=1)
            mean, half = _mean_ci(ratios)
            rows.append(dict(
                n=n, r_rule=rule, r=r, design_size=design.size, ratio_mean=mean,
                ci_low=mean - half, ci_high=mean + half, baseline=cfg.baseline,
                inner_reps=cfg.inner_reps, outer_reps=cfg.outer_reps, seed=cfg.seed,
                stream_key="/".join(map(str, key)),
            ))
            log.info("var-ratio n=%d rule=%s r=%d ratio=%.4f", n, rule, r, mean)
    return rows


def run_power_experiment(cfg: ExperimentConfig) -> list[dict[str, Any]]:
    """Rejection rates and runtimes of the PF and PB tests per scenario and cell.

    The runtime covers the test call only; median-heuristic bandwidths are
    computed beforehand.  PB runs on the first ``pb_reps`` replicates.
    """
    k = kernel_order(cfg.kernel)
    scenarios = cfg.scenarios or [cfg.scenario]
    pb_reps = cfg.inner_reps if cfg.pb_reps is None else min(cfg.pb_reps, cfg.inner_reps)
    rows = []
    for scenario in scenarios:
        for n in cfg.n_grid:
            sampler = make_sampler(scenario, n, cfg.dim)
            for rule in cfg.r_rules:
                r = resolve_r(rule, n, k)
                design = _design_for(cfg, n, r, k)
                key = (*_cell_key("power", n, rule), zlib.crc32(scenario.encode()))
                rejects: dict[str, list[bool]] = {m: [] for m in cfg.methods}
                times: dict[str, list[float]] = {m: [] for m in cfg.methods}
                for i in range(cfg.inner_reps):
                    rng = substream(cfg.seed, *key, i)
                    data = sampler(rng)
                    kernel = make_kernel(cfg.kernel, data, cfg.bandwidth)
                    if "pf" in cfg.methods:
                        t0 = time.perf_counter()
                        rep = pf_test(data, kernel, design, cfg.alpha, cfg.mu0)
                        times["pf"].append(time.perf_counter() - t0)
                        rejects["pf"].append(rep.reject)
                    if "pb" in cfg.methods and i < pb_reps:
                        pb_seed = int(rng.integers(2**63))
                        t0 = time.perf_counter()
                        rep = pb_test(data, kernel, design, cfg.alpha, cfg.B, pb_seed)
                        times["pb"].append(time.perf_counter() - t0)
                        rejects["pb"].append(rep.reject)
                for method in cfg.methods:
                    total = len(rejects[method])
                    if total == 0:
                        continue
                    count = int(sum(rejects[method]))
                    lo, hi = _rate_ci(count, total, cfg.ci_method)
                    t_mean, t_half = _mean_ci(np.array(times[method]))
                    rows.append(dict(
                        scenario=scenario, n=n, r_rule=rule, r=r, design_size=design.size,
                        method=method.upper(), rejection_rate=count / total, ci_low=lo, ci_high=hi,
                        reps=total, runtime_mean=t_mean, runtime_ci_half_width=t_half,
                        alpha=cfg.alpha, B=cfg.B if method == "pb" else "", seed=cfg.seed,
                        stream_key="/".join(map(str, key)),
                    ))
                log.info("power %s n=%d rule=%s done", scenario, n, rule)
    return rows


_CONSTRUCTORS = {
    "even": lambda n, r, eta: construct_even(n, r),
    "odd": lambda n, r, eta: construct_odd(n, r),
    "cyclic": lambda n, r, eta: construct_cyclic(len(eta), eta, n, r),
}


def time_construction(algorithm: str, n: int, r: int, repeats: int = 5, eta=None) -> tuple[float, Design]:
    """Median wall-clock seconds over ``repeats`` runs (after one warm-up)."""
    build = _CONSTRUCTORS[algorithm]
    design = build(n, r, eta)
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        design = build(n, r, eta)
        samples.append(time.perf_counter() - t0)
    return float(np.median(samples)), design


def run_bench_construct(cfg: ExperimentConfig) -> tuple[list[dict[str, Any]], dict[str, Any]]:
    """Median construction times over the (n, r, algorithm) grid and a linear fit in n*r.

    The odd-n construction runs at n+1 when n is even; r is rounded to the
    nearest admissible value and the resolved pair is reported.
    """
    algorithms = cfg.algorithms or ["even"]
    eta = cfg.eta or [1, 2, 4, 8]
    rows = []
    for alg in algorithms:
        if alg not in _CONSTRUCTORS:
            raise ValueError(f"unknown algorithm {alg!r}; choose from {sorted(_CONSTRUCTORS)}")
        for n in cfg.n_grid:
            # each k = 2 construction needs its own parity of n
            n_used = n
            if (alg == "even" and n % 2) or (alg == "odd" and n % 2 == 0):
                n_used = n + 1
            k = len(eta) if alg == "cyclic" else 2
            for r_req in cfg.r_grid:
                r = nearest_admissible_r(r_req, n_used, k)
                seconds, design = time_construction(alg, n_used, r, cfg.inner_reps, eta)
                report = verify_equireplicate(design)
                rows.append(dict(
                    n=n_used, r=r, kind=alg, seconds=seconds, size=design.size,
                    verified=bool(report.ok and report.r == r), repeats=cfg.inner_reps,
                ))
                log.info("bench %s n=%d r=%d %.4fs", alg, n_used, r, seconds)
    fits = {}
    for alg in algorithms:
        sel = [row for row in rows if row["kind"] == alg]
        if len(sel) >= 2:
            x = np.array([row["n"] * row["r"] for row in sel], dtype=float)
            y = np.array([row["seconds"] for row in sel])
            slope, intercept = np.polyfit(x, y, 1)
            resid = y - (slope * x + intercept)
            ss_tot = float(((y - y.mean()) ** 2).sum())
            r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
            fits[alg] = {"seconds_per_incidence": float(slope), "intercept": float(intercept), "r_squared": r2}
    return rows, {"linear_fit": fits}


def write_outputs(
    rows: list[dict[str, Any]],
    cfg: ExperimentConfig,
    out_dir: str | Path,
    name: str,
    extra: dict[str, Any] | None = None,
) -> tuple[Path, Path]:
    """Write ``<name>.csv`` (header row) and ``<name>.json`` (resolved config)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}.csv"
    json_path = out_dir / f"{name}.json"
    header: list[str] = []
    for row in rows:
        header.extend(key for key in row if key not in header)
    with csv_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header)
        writer.writeheader()
        writer.writerows(rows)
    meta = {"config": cfg.to_dict(), "rows": len(rows), **(extra or {})}
    json_path.write_text(json.dumps(meta, indent=2, default=str))
    return csv_path, json_path


def run_experiment(cfg: ExperimentConfig) -> tuple[list[dict[str, Any]], dict[str, Any]]:
    """Dispatch on ``cfg.kind``; returns rows and sidecar extras."""
    if cfg.kind == "ks":
        return run_ks_experiment(cfg), {}
    if cfg.kind == "var-ratio":
        return run_var_ratio_experiment(cfg), {}
    if cfg.kind == "power":
        return run_power_experiment(cfg), {}
    if cfg.kind == "bench":
        return run_bench_construct(cfg)
    raise ValueError(f"unknown experiment kind {cfg.kind!r}")
