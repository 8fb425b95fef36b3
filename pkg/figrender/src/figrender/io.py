"""Readers for the chainlab output formats.

Every reader validates the schema up front and fails loudly on a
mismatch; rendering never guesses at malformed input.
"""

from __future__ import annotations

import csv
import json


class SchemaMismatchError(ValueError):
    """Input file does not match the schema its figure kind expects."""


def _read_csv(path: str, header: list[str]):
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as e:
        raise SchemaMismatchError(f"cannot read {path}: {e}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise SchemaMismatchError(f"{path}: empty file") from None
        if first != header:
            raise SchemaMismatchError(
                f"{path}: expected columns {','.join(header)}, got {','.join(first)}")
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaMismatchError(f"{path}: line {i} has {len(row)} fields")
            rows.append(row)
    return rows


def read_bifurcation(path: str) -> dict[str, tuple[list[float], list[float]]]:
    """CSV r,chain,value -> per-chain (r values, attractor values)."""
    out = {"x": ([], []), "y": ([], [])}
    for i, (r, chain, value) in enumerate(_read_csv(path, ["r", "chain", "value"]),
                                          start=2):
        if chain not in out:
            raise SchemaMismatchError(f"{path}: line {i}: chain must be x or y")
        try:
            out[chain][0].append(float(r))
            out[chain][1].append(float(value))
        except ValueError:
            raise SchemaMismatchError(f"{path}: line {i}: non-numeric field") from None
    return out


def read_trajectory(path: str) -> tuple[list[int], list[float], list[float]]:
    """CSV n,x,y -> (indices, x series, y series)."""
    ns, xs, ys = [], [], []
    for i, (n, x, y) in enumerate(_read_csv(path, ["n", "x", "y"]), start=2):
        try:
            ns.append(int(n))
            xs.append(float(x))
            ys.append(float(y))
        except ValueError:
            raise SchemaMismatchError(f"{path}: line {i}: non-numeric field") from None
    return ns, xs, ys


def read_events(path: str) -> list[tuple[int, str, float]]:
    """CSV iteration,target,value -> event list."""
    events = []
    for i, (it, target, value) in enumerate(
            _read_csv(path, ["iteration", "target", "value"]), start=2):
        try:
            events.append((int(it), target, float(value)))
        except ValueError:
            raise SchemaMismatchError(f"{path}: line {i}: non-numeric field") from None
    return events


def read_ccm_report(path: str) -> dict:
    """report.json -> the ccm block with library sizes and skill curves."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise SchemaMismatchError(f"cannot read {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise SchemaMismatchError(f"{path}: not valid JSON: {e}") from None
    if not isinstance(doc, dict) or "ccm" not in doc or doc["ccm"] is None:
        raise SchemaMismatchError(f"{path}: missing 'ccm' field")
    cc = doc["ccm"]
    if not isinstance(cc.get("library_sizes"), list):
        raise SchemaMismatchError(f"{path}: ccm.library_sizes missing")
    for direction in ("y_to_x", "x_to_y"):
        block = cc.get(direction)
        if not isinstance(block, dict) or not isinstance(block.get("skill"), list):
            raise SchemaMismatchError(f"{path}: ccm.{direction}.skill missing")
        if len(block["skill"]) != len(cc["library_sizes"]):
            raise SchemaMismatchError(
                f"{path}: ccm.{direction}.skill length mismatch")
    return cc
