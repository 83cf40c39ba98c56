"""Command line interface.

Subcommands: ``detect`` runs a bootstrap change test on a stored series,
``simulate`` runs a size/power experiment and writes the result table,
``generate`` writes one synthetic series, ``critical-values`` tabulates
limit-law quantiles, ``preprocess`` detrends a series and writes it back.
``detect`` exits 0 when no change is found, 1 when a change is detected
and 2 on any error; the other subcommands exit 0 or 2.
"""
from __future__ import annotations

import argparse
import glob
import json
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import io
from .bootstrap import BootstrapConfig, bootstrap_test
from .core import FunctionalSample, GridDomain, VolumeSeries, detrend_polynomial
from .covariance import (
    empirical_covariance,
    eigendecompose,
    eigendecompose_gram,
    separable_covariance,
)
from .limit_laws import FUNCTIONALS, cached_quantile
from .scores import ScoreMatrix, compute_scores
from .simulate import MethodSpec, SimulationConfig, generate_series, run_size_power

METHOD_KINDS = {
    "multi": "multivariate-sum",
    "multi-max": "multivariate-max",
    "func": "functional-unweighted",
    "wfunc": "functional-weighted",
}


@dataclass
class TestReport:
    """Everything the ``detect`` subcommand decided, in json-native types."""

    __test__ = False  # not a pytest class despite the name

    method: str
    kind: str
    alternative: str
    input_path: str
    n_obs: int
    grid: list
    n_scores: int
    n_products: int
    block_length: int
    replicates: int
    seed: int
    alpha: float
    statistic: float
    p_value: float
    reject: bool
    changepoint: list
    backend: str
    eps1: float | None = None
    eps2: float | None = None
    top_components: list | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "TestReport":
        return cls(**json.loads(text))

    def to_csv(self) -> str:
        row = asdict(self)
        row["grid"] = "x".join(str(g) for g in self.grid)
        row["changepoint"] = "-".join(str(k) for k in self.changepoint)
        row.pop("top_components")
        fields = list(row)
        values = ["" if row[f] is None else str(row[f]) for f in fields]
        return ",".join(fields) + "\n" + ",".join(values) + "\n"

    def to_text(self) -> str:
        lines = [
            f"input: {self.input_path}",
            f"method: {self.method} ({self.kind}), alternative: {self.alternative}",
            f"observations: {self.n_obs}, grid: {'x'.join(str(g) for g in self.grid)}, "
            f"scores: {self.n_scores}, products: {self.n_products}",
            f"block length: {self.block_length}, replicates: {self.replicates}, "
            f"seed: {self.seed}, backend: {self.backend}",
            f"statistic: {self.statistic:.6g}",
            f"p-value: {self.p_value:.4f} (alpha {self.alpha:g})",
            f"decision: {'change detected' if self.reject else 'no change detected'}",
            f"changepoint: {'-'.join(str(k) for k in self.changepoint)}",
        ]
        if self.top_components:
            lines.append("leading components:")
            for entry in self.top_components:
                l1, l2 = entry["pair"]
                lines.append(f"  ({l1}, {l2}) p={entry['p_value']:.4f}")
        return "\n".join(lines) + "\n"


def _infer_format(path: str, explicit: str | None) -> str:
    if explicit:
        return explicit
    return "fcov" if path.endswith(".fcov") else "csv"


def _load_series(args):
    """Read the input into a FunctionalSample or VolumeSeries."""
    if args.input_glob is not None:
        paths = sorted(glob.glob(args.input_glob))
        if not paths:
            raise ValueError(f"no files match {args.input_glob!r}")
        fmt = _infer_format(paths[0], args.format)
        if fmt != "fcov":
            raise ValueError("glob input requires the volume format")
        parts = [io.read_volume(p) for p in paths]
        dims = parts[0].dims
        for p, part in zip(paths, parts):
            if part.dims != dims:
                raise ValueError(f"{p}: volume dimensions {part.dims} differ from {dims}")
        series = VolumeSeries(np.concatenate([p.values for p in parts], axis=0))
        return series, ",".join(paths[:3]) + ("..." if len(paths) > 3 else "")
    fmt = _infer_format(args.input, args.format)
    if fmt == "fcov":
        return io.read_volume(args.input), args.input
    values = io.read_csv_matrix(args.input)
    return FunctionalSample(values, GridDomain.uniform(values.shape[1])), args.input


def _detrend(series, order: int | None, is_volume: bool):
    if order is None:
        order = 3 if is_volume else None
    if order is None:
        return series
    if order < 0:
        raise ValueError("detrend order must be non-negative")
    return detrend_polynomial(series, order)


def _score_matrix(series, d: int, d_axis: int) -> tuple[ScoreMatrix, list]:
    """Eigenbasis scores, plus the grid dimensions for reporting."""
    if isinstance(series, VolumeSeries):
        system = separable_covariance(series, d_axis)
        if system.tensor_eigenvalues[0] <= 0:
            raise ValueError("input has no variation")
        if d > system.n_components:
            raise ValueError(
                f"requested {d} scores but the tensor basis has {system.n_components}; "
                "raise --d-axis"
            )
        grid = list(series.dims)
    else:
        n, g = series.values.shape
        if g > 4 * n:
            system = eigendecompose_gram(series, d)
        else:
            system = eigendecompose(empirical_covariance(series), d)
        if system.eigenvalues[0] <= 0:
            raise ValueError("input has no variation")
        if system.n_components < d:
            print(
                f"warning: sample supports only {system.n_components} of {d} "
                "requested components",
                file=sys.stderr,
            )
            d = system.n_components
        if system.degenerate:
            print(
                "warning: near-equal leading eigenvalues, score components are "
                "unstable",
                file=sys.stderr,
            )
        grid = [g]
    scores = compute_scores(series, system)
    return ScoreMatrix(scores.values[:, :d]), grid


def _cmd_detect(args) -> int:
    series, label = _load_series(args)
    is_volume = isinstance(series, VolumeSeries)
    series = _detrend(series, args.detrend_order, is_volume)
    n = series.values.shape[0]
    if args.d < 1:
        raise ValueError("--d must be positive")
    scores, grid = _score_matrix(series, args.d, args.d_axis)
    kind = METHOD_KINDS[args.method]
    functional = kind.startswith("functional")
    outcome = bootstrap_test(
        scores,
        BootstrapConfig(
            replicates=args.B,
            block_length=args.K,
            seed=args.seed,
            alternative=args.alt,
            kind=kind,
            eps1=args.eps1,
            eps2=args.eps2,
            threads=args.threads,
            component_pvalues=args.top_j > 0,
        ),
    )
    top = None
    if outcome.component_pvalues is not None and args.top_j > 0:
        order = np.argsort(outcome.component_pvalues, kind="stable")[: args.top_j]
        top = [
            {
                "pair": [int(outcome.pair_index[i, 0]) + 1, int(outcome.pair_index[i, 1]) + 1],
                "p_value": float(outcome.component_pvalues[i]),
            }
            for i in order
        ]
    cp = outcome.observed.changepoint
    report = TestReport(
        method=args.method,
        kind=kind,
        alternative=args.alt,
        input_path=label,
        n_obs=n,
        grid=grid,
        n_scores=scores.values.shape[1],
        n_products=int(outcome.pair_index.shape[0]),
        block_length=outcome.block_length,
        replicates=args.B,
        seed=args.seed,
        alpha=args.alpha,
        statistic=float(outcome.observed.value),
        p_value=float(outcome.p_value),
        reject=bool(outcome.reject(args.alpha)),
        changepoint=[int(k) for k in (cp if isinstance(cp, tuple) else (cp,))],
        backend=outcome.backend,
        eps1=args.eps1 if functional else None,
        eps2=args.eps2 if functional else None,
        top_components=top,
    )
    if args.report == "json" or args.report == "jsonl":
        text = report.to_json() + "\n"
    elif args.report == "csv":
        text = report.to_csv()
    else:
        text = report.to_text()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 1 if report.reject else 0


def _optional(cast):
    def parse(text):
        return None if text.lower() in ("none", "") else cast(text)

    return parse


_CONFIG_PARSERS = {
    "setting": int,
    "n": int,
    "n_basis": int,
    "grid_points": int,
    "dependence": str,
    "change": str,
    "mechanism": str,
    "theta": float,
    "theta1": float,
    "theta2": float,
    "m": int,
    "sigma_eps": _optional(float),
    "delta": float,
    "burn_in": int,
    "replications": int,
    "bootstrap_replicates": int,
    "block_length": _optional(int),
    "seed": int,
}


def _read_config_file(path: str) -> dict:
    """Flat ``key = value`` file with ``#`` comments, keys as in SimulationConfig."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in _CONFIG_PARSERS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                out[key] = _CONFIG_PARSERS[key](value.strip())
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad value for {key!r}")
    return out


def _simulation_config(args) -> SimulationConfig:
    merged = _read_config_file(args.config) if args.config else {}
    for field in fields(SimulationConfig):
        flag = getattr(args, field.name, None)
        if flag is not None:
            merged[field.name] = flag
    return SimulationConfig(**merged)


def _method_specs(args) -> tuple:
    specs = []
    for token in args.methods.split(","):
        token = token.strip()
        if token not in METHOD_KINDS:
            raise ValueError(f"unknown method {token!r} (choose from {sorted(METHOD_KINDS)})")
        kind = METHOD_KINDS[token]
        functional = kind.startswith("functional")
        specs.append(
            MethodSpec(
                label=token,
                kind=kind,
                n_scores=args.d_func if functional else args.d_multi,
                eps1=args.eps1,
                eps2=args.eps2,
            )
        )
    if not specs:
        raise ValueError("no methods given")
    return tuple(specs)


def _cmd_simulate(args) -> int:
    cfg = _simulation_config(args)
    methods = _method_specs(args)
    alphas = tuple(float(a) for a in args.alphas.split(","))
    table = run_size_power(
        cfg, methods, alphas=alphas, threads=args.threads, alt_pvalues=args.alt_pvalues
    )
    table.to_csv(args.output)
    print(
        f"ran {table.replications} replications x {table.bootstrap_replicates} "
        f"bootstrap replicates in {table.runtime_seconds:.1f}s "
        f"(config {table.config_hash})"
    )
    for spec in methods:
        at = [r for r in table.rows if r["method"] == spec.label]
        line = ", ".join(
            f"alpha {r['alpha']:g}: size {r['size']:.3f}"
            + ("" if np.isnan(r["power"]) else f" power {r['power']:.3f}")
            + ("" if np.isnan(r["power_pvalue"]) else f" (pval {r['power_pvalue']:.3f})")
            for r in at
        )
        print(f"{spec.label}: {line}")
    print(f"wrote {args.output}")
    return 0


def _cmd_generate(args) -> int:
    cfg = SimulationConfig(
        setting=args.setting,
        n=args.n,
        n_basis=args.n_basis,
        grid_points=args.grid_points,
        dependence=args.dependence,
        change=args.change,
        mechanism=args.mechanism,
        theta=args.theta,
        theta1=args.theta1,
        theta2=args.theta2,
        m=args.m,
        sigma_eps=args.sigma_eps,
        delta=args.delta,
    )
    sample = generate_series(cfg, args.seed)
    io.write_csv_matrix(args.output, sample.values)
    print(f"wrote {sample.values.shape[0]} curves on {sample.values.shape[1]} nodes to {args.output}")
    return 0


def _cmd_critical_values(args) -> int:
    rows = []
    for alpha in args.alpha:
        value = cached_quantile(
            args.dim,
            alpha,
            functional=args.functional,
            draws=args.draws,
            grid_resolution=args.resolution,
            seed=args.seed,
            threads=args.threads,
        )
        rows.append((args.dim, args.functional, alpha, value))
    lines = ["dim,functional,alpha,quantile"]
    lines += [f"{d},{f},{al:g},{q:.6g}" for d, f, al, q in rows]
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_preprocess(args) -> int:
    series, _ = _load_series(args)
    is_volume = isinstance(series, VolumeSeries)
    out = _detrend(series, args.detrend_order, is_volume)
    if isinstance(out, VolumeSeries):
        io.write_volume(args.output, out)
    else:
        io.write_csv_matrix(args.output, out.values)
    print(f"wrote detrended series to {args.output}")
    return 0


def _add_input_flags(p):
    p.add_argument("--input", help="series file (csv matrix or .fcov volume)")
    p.add_argument("--input-glob", help="glob of .fcov volume files, concatenated in sorted order")
    p.add_argument("--format", choices=["csv", "fcov"], help="override the extension-based format guess")
    p.add_argument(
        "--detrend-order",
        type=int,
        default=None,
        help="polynomial degree removed per node over time (volumes default to 3)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fcov", description="Covariance change tests for functional series."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="test a stored series for a covariance change")
    _add_input_flags(d)
    d.add_argument("--method", choices=sorted(METHOD_KINDS), default="wfunc")
    d.add_argument("--alt", choices=["amoc", "epidemic"], default="amoc")
    d.add_argument("--d", type=int, default=8, help="number of projection scores")
    d.add_argument("--d-axis", type=int, default=2, help="per-axis components for volumes")
    d.add_argument("--K", type=int, default=None, help="block length (default: cube root of n)")
    d.add_argument("--B", type=int, default=1000, help="bootstrap replicates")
    d.add_argument("--eps1", type=float, default=5e-4)
    d.add_argument("--eps2", type=float, default=2.5e-3)
    d.add_argument("--alpha", type=float, default=0.05)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--threads", type=int, default=1)
    d.add_argument("--top-j", type=int, default=0, help="report the j most significant products")
    d.add_argument("--report", choices=["text", "csv", "json", "jsonl"], default="text")
    d.add_argument("--output", help="write the report here instead of stdout")
    d.set_defaults(func=_cmd_detect)

    s = sub.add_parser("simulate", help="run a size/power experiment, write the table as csv")
    s.add_argument("--config", help="key = value file with SimulationConfig fields; flags override")
    s.add_argument("--setting", type=int, choices=[1, 2, 3], default=None)
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--n-basis", type=int, default=None)
    s.add_argument("--grid-points", type=int, default=None)
    s.add_argument("--dependence", choices=["iid", "far1"], default=None)
    s.add_argument("--change", choices=["none", "amoc", "epidemic"], default=None)
    s.add_argument("--mechanism", choices=["noise", "scale"], default=None)
    s.add_argument("--theta", type=float, default=None)
    s.add_argument("--theta1", type=float, default=None)
    s.add_argument("--theta2", type=float, default=None)
    s.add_argument("--m", type=int, default=None)
    s.add_argument("--sigma-eps", type=float, default=None)
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--replications", type=int, default=None)
    s.add_argument("--B", type=int, dest="bootstrap_replicates", default=None, help="bootstrap replicates")
    s.add_argument("--K", type=int, dest="block_length", default=None, help="block length (default: cube root of n)")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--methods", default="multi,func,wfunc", help="comma list of multi,multi-max,func,wfunc")
    s.add_argument("--d-multi", type=int, default=8, help="scores for the multivariate methods")
    s.add_argument("--d-func", type=int, default=55, help="scores offered to the functional methods")
    s.add_argument("--eps1", type=float, default=5e-4)
    s.add_argument("--eps2", type=float, default=2.5e-3)
    s.add_argument("--alphas", default="0.01,0.025,0.05,0.10", help="comma list of levels")
    s.add_argument(
        "--alt-pvalues",
        action="store_true",
        help="bootstrap the alternative replications too and report p-value-scale corrected power",
    )
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--output", required=True)
    s.set_defaults(func=_cmd_simulate)

    g = sub.add_parser("generate", help="write one synthetic series as a csv matrix")
    g.add_argument("--setting", type=int, choices=[1, 2, 3], default=2)
    g.add_argument("--n", type=int, default=200)
    g.add_argument("--n-basis", type=int, default=55)
    g.add_argument("--grid-points", type=int, default=200)
    g.add_argument("--dependence", choices=["iid", "far1"], default="iid")
    g.add_argument("--change", choices=["none", "amoc", "epidemic"], default="none")
    g.add_argument("--mechanism", choices=["noise", "scale"], default="noise")
    g.add_argument("--theta", type=float, default=0.5)
    g.add_argument("--theta1", type=float, default=0.4)
    g.add_argument("--theta2", type=float, default=0.7)
    g.add_argument("--m", type=int, default=2)
    g.add_argument("--sigma-eps", type=float, default=None)
    g.add_argument("--delta", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", required=True)
    g.set_defaults(func=_cmd_generate)

    c = sub.add_parser("critical-values", help="limit-law quantiles for the pivotal statistics")
    c.add_argument("--dim", type=int, required=True, help="number of product components")
    c.add_argument("--functional", choices=list(FUNCTIONALS), default="sum-amoc")
    c.add_argument("--alpha", type=float, nargs="+", default=[0.10, 0.05, 0.01])
    c.add_argument("--draws", type=int, default=100_000)
    c.add_argument("--resolution", type=int, default=1000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--threads", type=int, default=1)
    c.add_argument("--output")
    c.set_defaults(func=_cmd_critical_values)

    p = sub.add_parser("preprocess", help="detrend a series and write it back out")
    _add_input_flags(p)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_preprocess)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("detect", "preprocess"):
        if (args.input is None) == (args.input_glob is None):
            print("error: provide exactly one of --input / --input-glob", file=sys.stderr)
            return 2
        if args.command == "preprocess" and args.detrend_order is None:
            args.detrend_order = 3
    try:
        return args.func(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
