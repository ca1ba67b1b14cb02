"""Command-line surface.

Subcommands: validate, sample, dist, cond-cov, metrics, transform, bound,
scan, counterexample. Outputs are deterministic functions of (inputs, seed,
numeric mode). Failures print a machine-readable JSON error report to
stderr and exit with a per-class code:

    3  format error (malformed JSON/CSV, bad numeric literals)
    4  I/O failure
    5  cap violation (table or enumeration size)
    6  invalid tree / unmet operation precondition
    7  zero-probability conditioning event
    8  scan found a violated asserted bound

IFT_THREADS caps scan worker count (default 1; results are identical for
any value).
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from fractions import Fraction

import click

from . import bounds as bounds_mod
from . import core, covariance, metrics, serialize, transforms
from .errors import (
    CapExceededError,
    FormatError,
    IFTError,
    InvalidTreeError,
    PreconditionError,
    ZeroProbabilityError,
)
from .numeric import RATIONAL

EXIT_OK = 0
EXIT_FORMAT = 3
EXIT_IO = 4
EXIT_CAP = 5
EXIT_INVALID = 6
EXIT_ZERO_PROB = 7
EXIT_SCAN_VIOLATION = 8

_ERROR_CODES = [
    (FormatError, EXIT_FORMAT),
    (CapExceededError, EXIT_CAP),
    (InvalidTreeError, EXIT_INVALID),
    (ZeroProbabilityError, EXIT_ZERO_PROB),
    (PreconditionError, EXIT_INVALID),
    (OSError, EXIT_IO),
]


@dataclass
class RunConfig:
    """A parsed invocation: subcommand name plus its options."""

    command: str
    options: dict


def _parse_value(tree: core.InfoFlowTree, text: str):
    """Parse a CLI numeric literal in the tree's mode."""
    try:
        if tree.mode == RATIONAL:
            return Fraction(text)
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"cannot parse {text!r}: {exc}") from None


def _parse_ids(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError as exc:
        raise FormatError(f"cannot parse id list {text!r}: {exc}") from None


# -----------------------------------------------------------------------------
# Command bodies (raise IFTError subclasses; return exit codes)
# -----------------------------------------------------------------------------
def _cmd_validate(in_path: str) -> int:
    tree = serialize.load_tree(in_path)
    violations = core.validate(tree)
    click.echo(json.dumps({"valid": not violations, "violations": violations}))
    return EXIT_OK if not violations else EXIT_INVALID


def _cmd_sample(in_path: str, seed: int, n: int, out: str) -> int:
    tree = serialize.load_tree(in_path)
    cols = core.sample_batch(tree, seed, n)
    rows = []
    for i in range(n):
        values = {str(v): int(cols[v][i]) for v in tree.vertices}
        for u, v, _ in tree.edges:
            values[f"{u}-{v}"] = int(cols[u][i]) * int(cols[v][i])
        rows.append({"seed": seed, "draw": i, "values": values})
    serialize.emit_report(rows, "jsonl", out)
    return EXIT_OK


def _cmd_dist(in_path: str, out: str, method: str, max_leaves: int, max_vertices: int) -> int:
    tree = serialize.load_tree(in_path)
    if method == "dp":
        dist = core.leaf_distribution(tree, max_vars=max_leaves)
    else:
        dist = core.leaf_distribution_bruteforce(tree, max_vertices=max_vertices)
    serialize.save_distribution(dist, out)
    return EXIT_OK


def _cmd_cond_cov(in_path: str, u: int, v: int, condition_on: str, report: str, max_leaves: int) -> int:
    tree = serialize.load_tree(in_path)
    if condition_on == "all-other-leaves":
        cond = [l for l in tree.leaves if l not in (u, v)]
    else:
        cond = _parse_ids(condition_on)
    result = covariance.expected_abs_cond_cov(tree, u, v, cond, max_vars=max_leaves)
    payload = serialize.cond_cov_report_to_json(result)
    with open(report, "w") as fh:
        fh.write(serialize._raw_json(payload) + "\n")
    click.echo(serialize._raw_json({"expectation": result.expectation}))
    return EXIT_OK


def _cmd_metrics(in_path: str, metric: str, t_range: str, out: str, max_leaves: int) -> int:
    with open(in_path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{in_path}: {exc}") from None
    if serialize.is_tree_json(data):
        dist = core.leaf_distribution(serialize.tree_from_json(data), max_vars=max_leaves)
    else:
        dist = serialize.distribution_from_json(data)
    try:
        lo_text, hi_text = t_range.split("..")
        lo, hi = int(lo_text), int(hi_text)
    except ValueError as exc:
        raise FormatError(f"cannot parse t range {t_range!r} (expected a..b): {exc}") from None
    series = metrics.metric_series(dist, metric, range(lo, hi + 1))
    rows = [{"metric": series.metric, "t": t, "value": val} for t, val in series.values]
    serialize.emit_report(rows, "csv", out, fieldnames=["metric", "t", "value"])
    return EXIT_OK


def _cmd_transform(
    in_path: str,
    rule: str,
    out: str,
    trace_path: str | None,
    vertex: int | None,
    edge: str | None,
    rho1: str | None,
    rho2: str | None,
    vertices: str | None,
    m: int | None,
    attach: str | None,
) -> int:
    tree = serialize.load_tree(in_path)
    trace = None
    if rule == "normalize-signs":
        result, trace = transforms.normalize_internal_signs(tree)
    elif rule == "binary":
        result, trace = transforms.to_binary(tree)
    elif rule == "simple-caterpillar":
        result, trace = transforms.to_simple_caterpillar(tree)
    elif rule == "negate":
        if vertex is None:
            raise PreconditionError("--vertex is required for rule negate")
        result = transforms.negate_internal_vertex(tree, vertex)
    elif rule == "merge":
        if vertex is None:
            raise PreconditionError("--vertex is required for rule merge")
        result = transforms.merge_degree2(tree, vertex)
    elif rule == "split-edge":
        if edge is None or rho1 is None or rho2 is None:
            raise PreconditionError("--edge, --rho1, --rho2 are required for rule split-edge")
        a, b = _parse_ids(edge)
        result = transforms.split_edge(tree, (a, b), _parse_value(tree, rho1), _parse_value(tree, rho2))
    elif rule == "contract":
        if vertices is None:
            raise PreconditionError("--vertices is required for rule contract")
        result = transforms.contract_unit_subgraph(tree, _parse_ids(vertices))
    elif rule == "split-vertex":
        if vertex is None or m is None or attach is None:
            raise PreconditionError("--vertex, --m, --attach are required for rule split-vertex")
        attachment = {}
        for part in attach.split(","):
            n_text, pos_text = part.split(":")
            attachment[int(n_text)] = int(pos_text)
        result = transforms.split_vertex(tree, vertex, m, attachment)
    else:
        raise PreconditionError(f"unknown transform rule {rule!r}")
    serialize.save_tree(result, out)
    if trace_path is not None and trace is not None:
        with open(trace_path, "w") as fh:
            fh.write(json.dumps(serialize.trace_to_json(trace)) + "\n")
    return EXIT_OK


def _cmd_bound(alpha: float) -> int:
    click.echo(serialize._raw_json({"alpha": alpha, "bound": bounds_mod.star_bound(alpha)}))
    return EXIT_OK


def _cmd_scan(family: str, trials: int, seed: int, min_size: int, max_size: int, out: str) -> int:
    records = bounds_mod.scan_decay_bound(family, trials, (min_size, max_size), seed)
    serialize.emit_report(records, "jsonl", out)
    violations = bounds_mod.scan_violations(records)
    click.echo(
        serialize._raw_json(
            {
                "family": family,
                "trials": trials,
                "violations": len(violations),
                "max_lhs_times_t": bounds_mod.max_scaled_lhs(records),
            }
        )
    )
    return EXIT_SCAN_VIOLATION if violations else EXIT_OK


def _cmd_counterexample(order: int, out: str) -> int:
    dist = bounds_mod.parity_counterexample(order)
    serialize.save_distribution(dist, out)
    return EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "sample": _cmd_sample,
    "dist": _cmd_dist,
    "cond-cov": _cmd_cond_cov,
    "metrics": _cmd_metrics,
    "transform": _cmd_transform,
    "bound": _cmd_bound,
    "scan": _cmd_scan,
    "counterexample": _cmd_counterexample,
}


def run(config: RunConfig) -> int:
    """Dispatch a parsed invocation; returns the process exit code."""
    handler = _COMMANDS.get(config.command)
    if handler is None:
        raise PreconditionError(f"unknown command {config.command!r}")
    return handler(**config.options)


def _finish(config: RunConfig) -> None:
    try:
        code = run(config)
    except IFTError as exc:
        for klass, ecode in _ERROR_CODES:
            if isinstance(exc, klass):
                code = ecode
                break
        else:
            code = 1
        click.echo(
            json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}),
            err=True,
        )
    except OSError as exc:
        code = EXIT_IO
        click.echo(
            json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}),
            err=True,
        )
    sys.exit(code)


# -----------------------------------------------------------------------------
# click wiring
# -----------------------------------------------------------------------------
@click.group()
def cli():
    """Exact inference and rewrites for information flow trees."""


@cli.command("validate")
@click.option("--in", "in_path", required=True, type=click.Path())
def validate_command(in_path):
    """Report every violated tree invariant."""
    _finish(RunConfig("validate", {"in_path": in_path}))


@cli.command("sample")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--seed", required=True, type=int)
@click.option("--n", "n", default=1, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
def sample_command(in_path, seed, n, out):
    """Draw vertex/edge assignments (JSONL)."""
    _finish(RunConfig("sample", {"in_path": in_path, "seed": seed, "n": n, "out": out}))


@cli.command("dist")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--method", type=click.Choice(["dp", "bruteforce"]), default="dp", show_default=True)
@click.option("--max-leaves", default=core.DEFAULT_MAX_VARS, show_default=True, type=int)
@click.option("--max-vertices", default=core.DEFAULT_MAX_VERTICES, show_default=True, type=int)
def dist_command(in_path, out, method, max_leaves, max_vertices):
    """Exact leaf distribution of a tree."""
    _finish(
        RunConfig(
            "dist",
            {
                "in_path": in_path,
                "out": out,
                "method": method,
                "max_leaves": max_leaves,
                "max_vertices": max_vertices,
            },
        )
    )


@cli.command("cond-cov")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--u", "u", required=True, type=int)
@click.option("--v", "v", required=True, type=int)
@click.option("--condition-on", default="all-other-leaves", show_default=True)
@click.option("--report", required=True, type=click.Path())
@click.option("--max-leaves", default=core.DEFAULT_MAX_VARS, show_default=True, type=int)
def cond_cov_command(in_path, u, v, condition_on, report, max_leaves):
    """Per-outcome conditional covariance report for a vertex pair."""
    _finish(
        RunConfig(
            "cond-cov",
            {
                "in_path": in_path,
                "u": u,
                "v": v,
                "condition_on": condition_on,
                "report": report,
                "max_leaves": max_leaves,
            },
        )
    )


@cli.command("metrics")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--metric", type=click.Choice(["avgcov", "avgcovcond", "avginfocond"]), required=True)
@click.option("--t-range", default="0..0", show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--max-leaves", default=core.DEFAULT_MAX_VARS, show_default=True, type=int)
def metrics_command(in_path, metric, t_range, out, max_leaves):
    """Metric series over conditioning orders (CSV: metric,t,value)."""
    _finish(
        RunConfig(
            "metrics",
            {
                "in_path": in_path,
                "metric": metric,
                "t_range": t_range,
                "out": out,
                "max_leaves": max_leaves,
            },
        )
    )


@cli.command("transform")
@click.option("--rule", required=True)
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--trace", "trace_path", default=None, type=click.Path())
@click.option("--vertex", default=None, type=int)
@click.option("--edge", default=None)
@click.option("--rho1", default=None)
@click.option("--rho2", default=None)
@click.option("--vertices", default=None)
@click.option("--m", "m", default=None, type=int)
@click.option("--attach", default=None)
def transform_command(rule, in_path, out, trace_path, vertex, edge, rho1, rho2, vertices, m, attach):
    """Apply a leaf-law-preserving rewrite."""
    _finish(
        RunConfig(
            "transform",
            {
                "in_path": in_path,
                "rule": rule,
                "out": out,
                "trace_path": trace_path,
                "vertex": vertex,
                "edge": edge,
                "rho1": rho1,
                "rho2": rho2,
                "vertices": vertices,
                "m": m,
                "attach": attach,
            },
        )
    )


@cli.command("bound")
@click.option("--alpha", required=True, type=float)
def bound_command(alpha):
    """Print the star variance bound 4 exp(-alpha/2)."""
    _finish(RunConfig("bound", {"alpha": alpha}))


@cli.command("scan")
@click.option("--family", type=click.Choice(list(bounds_mod.SCAN_FAMILIES)), required=True)
@click.option("--trials", required=True, type=int)
@click.option("--seed", required=True, type=int)
@click.option("--min-size", default=2, show_default=True, type=int)
@click.option("--max-size", required=True, type=int)
@click.option("--out", required=True, type=click.Path())
def scan_command(family, trials, seed, min_size, max_size, out):
    """Randomized decay-bound scan (JSONL records; nonzero exit on violation)."""
    _finish(
        RunConfig(
            "scan",
            {
                "family": family,
                "trials": trials,
                "seed": seed,
                "min_size": min_size,
                "max_size": max_size,
                "out": out,
            },
        )
    )


@cli.command("counterexample")
@click.option("--order", "-t", required=True, type=int, help="Threshold conditioning order T.")
@click.option("--out", required=True, type=click.Path())
def counterexample_command(order, out):
    """Emit the parity distribution on T+2 variables."""
    _finish(RunConfig("counterexample", {"order": order, "out": out}))


def main():
    cli()


if __name__ == "__main__":
    main()
