"""Command-line entry point: ``equidesign <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import harness
from .dataset import Dataset
from .design import (
    DesignError,
    construct_cyclic,
    construct_disjoint,
    construct_even,
    construct_odd,
    read_design,
    sample_random_design,
    verify_equireplicate,
    write_design,
)
from .hypergraph import (
    ProfileTooLarge,
    be_bound_deterministic,
    be_bound_equi_linear,
    be_bound_equireplicate,
    degree_profile,
    intersection_profile,
    is_linear,
    line_graph_max_degree,
)
from .inference import pb_test, pf_test
from .kernels import GaussianKernel, HSICKernel, LinearKernel, MMDKernel, median_heuristic
from .ustat import estimate_sigma_k, evaluate


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, default=_jsonable))


def _jsonable(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def _load_csv(path: str) -> np.ndarray:
    """Comma-separated values; whitespace-separated files are accepted too."""
    with open(path) as fh:
        comma = "," in fh.read(4096)
    return np.loadtxt(path, delimiter="," if comma else None, ndmin=2)


# -- design_core -----------------------------------------------------------

def cmd_construct(args) -> int:
    kind = args.kind
    if kind == "even":
        design = construct_even(args.n, args.r)
    elif kind == "odd":
        design = construct_odd(args.n, args.r)
    elif kind == "cyclic":
        eta = _int_list(args.eta) if args.eta else [2**j for j in range(args.k)]
        design = construct_cyclic(len(eta), eta, args.n, args.r)
    elif kind == "disjoint":
        design = construct_disjoint(args.n, args.k)
    else:
        if args.m is None:
            raise DesignError("--m is required for random designs")
        design = sample_random_design(args.n, args.k, args.m, mode=args.mode, seed=args.seed)
    write_design(design, args.out)
    print(f"wrote {design.size} blocks (n={design.n}, k={design.k}, r={design.r}) to {args.out}")
    if design.meta.get("generator_set_repaired"):
        print(
            "note: generators taken as the first r/k coprimes of n: "
            f"{design.meta['generators']}"
        )
    return 0


def cmd_verify(args) -> int:
    try:
        design = read_design(args.file)
    except DesignError as exc:
        print(f"invalid design: {exc}")
        return 1
    report = verify_equireplicate(design)
    if report.ok and report.matches_declared:
        print(report.r)
        for note in report.notes:
            print(note)
        return 0
    print(report.describe())
    return 1


# -- hypergraph_stats ------------------------------------------------------

def cmd_stats(args) -> int:
    design = read_design(args.file)
    prof = degree_profile(design)
    out = {
        "degrees": prof.summary(),
        "delta": prof.max_degree,
        "dbar": prof.avg_degree,
        "size": design.size,
    }
    if args.line_graph:
        out["line_graph_max_degree"] = line_graph_max_degree(design, include_loops=not args.no_loops)
        out["line_graph_includes_loops"] = not args.no_loops
    if args.profile:
        try:
            out["f"] = intersection_profile(design, max_blocks=args.max_blocks).as_list()
        except ProfileTooLarge as exc:
            out["f"] = None
            out["f_error"] = str(exc)
    if args.linear:
        out["linear"] = is_linear(design)
    _emit(out)
    return 0


def cmd_bound(args) -> int:
    common = dict(k=args.k, n=args.n, p=args.p, theta=args.theta, sigma_k=args.sigma_k)
    if args.kind == "det":
        if args.delta is None or args.dbar is None:
            raise ValueError("--delta and --dbar are required for --kind det")
        value = be_bound_deterministic(delta=args.delta, dbar=args.dbar, **common)
    else:
        if args.r is None:
            raise ValueError("--r is required for --kind equi and equilin")
        if args.kind == "equi":
            value = be_bound_equireplicate(r=args.r, **common)
        else:
            if args.sigma_1 is None:
                raise ValueError("--sigma-1 is required for --kind equilin")
            value = be_bound_equi_linear(r=args.r, sigma_1=args.sigma_1, **common)
    print(repr(value))
    return 0


# -- ustat_engine / inference ---------------------------------------------

def _paired_data(x_path: str, y_path: str | None, split: int | None) -> Dataset:
    x = _load_csv(x_path)
    if y_path is not None:
        return Dataset.paired(x, _load_csv(y_path))
    if split is None:
        raise ValueError("paired kernels need --y FILE or --split COLUMN")
    return Dataset(x, split=split)


def _bandwidth(arg: str | None, points: np.ndarray) -> float:
    if arg is None or arg == "median":
        return median_heuristic(points)
    return float(arg)


def _base(kind: str, bandwidth: str | None, points: np.ndarray):
    if kind == "linear":
        return LinearKernel()
    return GaussianKernel(_bandwidth(bandwidth, points))


def _build_kernel(name: str, base: str, bandwidth: str | None, data: Dataset):
    if name == "linear":
        return LinearKernel()
    if name == "gaussian":
        return GaussianKernel(_bandwidth(bandwidth, data.values))
    if name == "mmd":
        return MMDKernel(_base(base, bandwidth, np.vstack([data.x, data.y])))
    return HSICKernel(_base(base, bandwidth, data.x), _base(base, bandwidth, data.y))


def cmd_ustat(args) -> int:
    design = read_design(args.design)
    if args.kernel in ("mmd", "hsic"):
        data = _paired_data(args.data, args.y, args.split)
    else:
        data = Dataset(_load_csv(args.data))
    kernel = _build_kernel(args.kernel, args.base, args.bandwidth, data)
    res = evaluate(design, data, kernel)
    out = res.to_dict()
    if args.estimate_variance:
        k = design.k
        m = design.n - design.n % k
        s2 = estimate_sigma_k(data.head(m), kernel)
        # degenerate-case scaling: Var U ~ sigma_k**2 / |D|
        out["variance"] = s2 / design.size
        out["variance_kind"] = "estimated"
        out["sigma_k_sq"] = s2
    out["kernel"] = kernel.describe()
    _emit(out)
    return 0


def cmd_test(args) -> int:
    design = read_design(args.design)
    data = _paired_data(args.x, args.y, args.split)
    name = "mmd" if args.problem == "two-sample" else "hsic"
    kernel = _build_kernel(name, args.kernel, args.bandwidth, data)
    if args.method == "pf":
        report = pf_test(data, kernel, design, alpha=args.alpha, mu0=args.mu0)
    else:
        report = pb_test(data, kernel, design, alpha=args.alpha, B=args.B, seed=args.seed,
                         problem=args.problem)
    _emit(report.to_dict())
    return 0


# -- harness ---------------------------------------------------------------

_OVERRIDE_FLAGS = {
    "n_grid": "--n-grid",
    "r_rules": "--r-rules",
    "r_grid": "--r-grid",
    "algorithms": "--algorithms",
    "kernel": "--kernel",
    "bandwidth": "--bandwidth",
    "scenario": "--scenario",
    "scenarios": "--scenarios",
    "dim": "--dim",
    "inner_reps": "--inner-reps",
    "outer_reps": "--outer-reps",
    "reference_reps": "--reference-reps",
    "standardize": "--standardize",
    "baseline": "--baseline",
    "methods": "--methods",
    "pb_reps": "--pb-reps",
    "alpha": "--alpha",
    "B": "--B",
    "mu0": "--mu0",
    "ci_method": "--ci-method",
    "eta": "--eta",
    "seed": "--seed",
}


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON or key=value config file")
    p.add_argument("--paper-scale", action="store_true", help="full replication counts")
    p.add_argument("--out", default=None, help="output directory (default: results)")
    for dest, flag in _OVERRIDE_FLAGS.items():
        p.add_argument(flag, dest=dest, default=None)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="extra config override (repeatable)")


def _run_experiment(kind: str, args) -> int:
    overrides = {dest: getattr(args, dest) for dest in _OVERRIDE_FLAGS}
    for item in args.set:
        key, _, value = item.partition("=")
        overrides[key.strip().replace("-", "_")] = value
    if args.out is not None:
        overrides["out"] = args.out
    cfg = harness.load_config(kind, args.config, overrides, paper_scale=args.paper_scale)
    rows, extra = harness.run_experiment(cfg)
    name = "bench_construct" if kind == "bench" else kind.replace("-", "_")
    csv_path, json_path = harness.write_outputs(rows, cfg, cfg.out, name, extra)
    print(f"wrote {len(rows)} rows to {csv_path} (config: {json_path})")
    return 0


def cmd_sim(args) -> int:
    return _run_experiment(args.experiment, args)


def cmd_bench(args) -> int:
    return _run_experiment("bench", args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="equidesign",
        description="Equireplicate designs, incomplete U-statistics and kernel tests.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a design and write it to a file")
    p.add_argument("--kind", required=True, choices=["even", "odd", "cyclic", "disjoint", "random"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--eta", default=None, help="comma-separated offsets, e.g. 1,2,4")
    p.add_argument("--m", type=int, default=None, help="number of blocks (random)")
    p.add_argument("--mode", default="without", choices=["without", "with"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="check equireplication of a design file")
    p.add_argument("file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stats", help="degree and intersection statistics as JSON")
    p.add_argument("file")
    p.add_argument("--profile", action="store_true")
    p.add_argument("--line-graph", action="store_true")
    p.add_argument("--linear", action="store_true")
    p.add_argument("--no-loops", action="store_true", help="line-graph degree without the self-loop")
    p.add_argument("--max-blocks", type=int, default=20_000)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bound", help="Berry-Esseen bound")
    p.add_argument("--kind", required=True, choices=["det", "equi", "equilin"])
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--sigma-k", type=float, required=True)
    p.add_argument("--r", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--dbar", type=float)
    p.add_argument("--sigma-1", type=float)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("ustat", help="evaluate an incomplete U-statistic")
    p.add_argument("--design", required=True)
    p.add_argument("--data", required=True, help="CSV, one observation per row")
    p.add_argument("--y", default=None, help="CSV of the paired y sample (mmd, hsic)")
    p.add_argument("--split", type=int, default=None, help="x/y column split of --data")
    p.add_argument("--kernel", required=True, choices=["linear", "gaussian", "mmd", "hsic"])
    p.add_argument("--base", default="linear", choices=["linear", "gaussian"])
    p.add_argument("--bandwidth", default=None, help="number or 'median'")
    p.add_argument("--estimate-variance", action="store_true")
    p.set_defaults(func=cmd_ustat)

    p = sub.add_parser("test", help="PF or PB kernel test")
    p.add_argument("--method", required=True, choices=["pf", "pb"])
    p.add_argument("--problem", required=True, choices=["two-sample", "independence"])
    p.add_argument("--x", required=True)
    p.add_argument("--y", default=None)
    p.add_argument("--split", type=int, default=None)
    p.add_argument("--design", required=True)
    p.add_argument("--kernel", default="gaussian", choices=["linear", "gaussian"])
    p.add_argument("--bandwidth", default=None, help="number or 'median'")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--mu0", type=float, default=0.0)
    p.add_argument("--B", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("sim", help="Monte Carlo experiments")
    p.add_argument("experiment", choices=["ks", "var-ratio", "power"])
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("bench", help="timing benchmarks")
    p.add_argument("target", choices=["construct"])
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DesignError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
