"""On-disk formats: tree / distribution JSON, report emission, round-trips.

Tree files:      {"vertices": [ids], "edges": [[u, v, rho]], "leaves": [ids]?}
Distribution:    {"labels": [ids], "probs": [2^n values in bit-index order]}

Rational values are spelled as "p/q" strings; any JSON number is read as a
float. A file mixing the two styles is rejected, mirroring the uniform-mode
invariant of the in-memory types. parse(emit(x)) == x in both modes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, is_dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .bounds import ScanRecord
from .core import InfoFlowTree, JointDistribution
from .covariance import CondCovReport
from .errors import FormatError, IFTError
from .numeric import parse_json_number, to_json_value
from .transforms import TransformTrace


# -----------------------------------------------------------------------------
# Trees
# -----------------------------------------------------------------------------
def tree_to_json(tree: InfoFlowTree) -> dict:
    return {
        "vertices": list(tree.vertices),
        "edges": [[u, v, to_json_value(rho)] for u, v, rho in tree.edges],
        "leaves": list(tree.leaves),
    }


def tree_from_json(data) -> InfoFlowTree:
    if not isinstance(data, dict):
        raise FormatError("tree JSON must be an object")
    try:
        vertices = [int(v) for v in data["vertices"]]
        edges = []
        for item in data["edges"]:
            u, v, raw = item
            edges.append((int(u), int(v), parse_json_number(raw)))
        leaves = data.get("leaves")
        if leaves is not None:
            leaves = tuple(int(v) for v in leaves)
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed tree JSON: {exc}") from None
    return InfoFlowTree(tuple(vertices), tuple(edges), leaves)


def load_tree(path) -> InfoFlowTree:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
    return tree_from_json(data)


def save_tree(tree: InfoFlowTree, path) -> None:
    Path(path).write_text(json.dumps(tree_to_json(tree)) + "\n")


# -----------------------------------------------------------------------------
# Distributions
# -----------------------------------------------------------------------------
def distribution_to_json(dist: JointDistribution) -> dict:
    return {
        "labels": list(dist.labels),
        "probs": [to_json_value(p) for p in dist.probs],
    }


def distribution_from_json(data) -> JointDistribution:
    if not isinstance(data, dict):
        raise FormatError("distribution JSON must be an object")
    try:
        labels = tuple(int(v) for v in data["labels"])
        probs = tuple(parse_json_number(p) for p in data["probs"])
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed distribution JSON: {exc}") from None
    try:
        return JointDistribution(labels, probs)
    except IFTError as exc:
        raise FormatError(f"invalid distribution table: {exc}") from None


def load_distribution(path) -> JointDistribution:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
    return distribution_from_json(data)


def save_distribution(dist: JointDistribution, path) -> None:
    Path(path).write_text(json.dumps(distribution_to_json(dist)) + "\n")


def is_tree_json(data) -> bool:
    """Distinguish tree files from distribution files by their keys."""
    return isinstance(data, dict) and "edges" in data


# -----------------------------------------------------------------------------
# Raw JSON emission (17-significant-digit floats, "p/q" rationals)
# -----------------------------------------------------------------------------
def _float_repr(x: float) -> str:
    text = format(x, ".17g")
    if "." not in text and "e" not in text and "n" not in text:
        text += ".0"
    return text


def _raw_json(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, Fraction):
        return json.dumps(str(value))
    if isinstance(value, float):
        return _float_repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_raw_json(v) for v in value) + "]"
    if isinstance(value, dict):
        return (
            "{"
            + ", ".join(f"{json.dumps(str(k))}: {_raw_json(v)}" for k, v in value.items())
            + "}"
        )
    raise FormatError(f"cannot serialize {type(value).__name__} value {value!r}")


def _csv_cell(value) -> str:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        return _float_repr(value)
    if isinstance(value, (list, tuple)):
        return _raw_json(value)
    return str(value)


def record_rows(records: Iterable) -> list[dict]:
    """Dataclasses or mappings -> ordered plain dicts."""
    rows = []
    for rec in records:
        if is_dataclass(rec):
            rows.append(asdict(rec))
        elif isinstance(rec, dict):
            rows.append(dict(rec))
        else:
            raise FormatError(f"cannot emit record of type {type(rec).__name__}")
    return rows


def emit_report(records, fmt: str, path, fieldnames: Sequence[str] | None = None):
    """Write records as csv, json, or jsonl with a stable field order.

    Floats are serialized with 17 significant digits (round-trip exact);
    rationals as "p/q". ``fieldnames`` supplies the CSV header when the
    record list is empty.
    """
    rows = record_rows(records)
    if fmt == "csv":
        names = list(fieldnames) if fieldnames else (list(rows[0]) if rows else [])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(names)
            for row in rows:
                writer.writerow([_csv_cell(row[k]) for k in names])
    elif fmt == "jsonl":
        with open(path, "w") as fh:
            for row in rows:
                fh.write(_raw_json(row) + "\n")
    elif fmt == "json":
        with open(path, "w") as fh:
            fh.write("[" + ", ".join(_raw_json(row) for row in rows) + "]\n")
    else:
        raise FormatError(f"unknown report format {fmt!r}; use csv, json, or jsonl")
    return path


def scan_record_from_json(data: dict) -> ScanRecord:
    try:
        return ScanRecord(
            trial=int(data["trial"]),
            seed=int(data["seed"]),
            family=str(data["family"]),
            topology_hash=str(data["topology_hash"]),
            t=int(data["t"]),
            rhos=tuple(float(r) for r in data["rhos"]),
            quantity=str(data["quantity"]),
            lhs=float(data["lhs"]),
            bound=float(data["bound"]),
            margin=float(data["margin"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed scan record: {exc}") from None


# -----------------------------------------------------------------------------
# Reports with structure
# -----------------------------------------------------------------------------
def cond_cov_report_to_json(report: CondCovReport) -> dict:
    return {
        "u": report.u,
        "v": report.v,
        "conditioning": list(report.conditioning),
        "outcomes": [
            {
                "assignment": {str(k): val for k, val in oc.assignment.items()},
                "probability": to_json_value(oc.probability),
                "covariance": to_json_value(oc.covariance),
            }
            for oc in report.outcomes
        ],
        "expectation": to_json_value(report.expectation),
    }


def trace_to_json(trace: TransformTrace) -> dict:
    def _clean(value):
        if isinstance(value, Fraction):
            return to_json_value(value)
        if isinstance(value, dict):
            return {str(k): _clean(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [_clean(v) for v in value]
        return value

    return {
        "steps": [
            {
                "rule": step.rule,
                "args": _clean(step.args),
                "edges_before": _clean(step.edges_before),
                "edges_after": _clean(step.edges_after),
            }
            for step in trace.steps
        ],
        "metadata": _clean(trace.metadata),
    }
