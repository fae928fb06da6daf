"""Experiment sweeps: paired open/closed runs across a swept dimension."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..domain import Scenario, validate_scenario
from ..errors import SchemaError
from ..mpc import run_closed_loop, run_open_loop

DIMENSIONS = ("replan_period", "mismatch", "noise")


@dataclass
class ExperimentSpec:
    scenario_doc: dict
    dimension: str
    values: tuple
    seeds_per_cell: int
    out_path: object = None

    def __post_init__(self):
        if self.dimension not in DIMENSIONS:
            raise SchemaError(f"sweep dimension {self.dimension!r} not in {DIMENSIONS}")
        self.values = tuple(self.values)
        if not self.values:
            raise SchemaError("sweep values must be non-empty")
        if self.seeds_per_cell < 1:
            raise SchemaError("seeds_per_cell must be >= 1")


def scenario_variant(doc: dict, dimension: str, value) -> Scenario:
    import copy

    doc = copy.deepcopy(doc)
    if dimension == "replan_period":
        doc["control"]["replan_period_months"] = int(value)
    elif dimension == "mismatch":
        doc["mismatch"]["level"] = float(value)
    elif dimension == "noise":
        n = len(doc["variables"])
        doc["plant"]["shock_std"] = [float(value)] * n
    return validate_scenario(doc)


def experiment_sweep(spec: ExperimentSpec) -> list[dict]:
    """For each sweep value x seed, run paired open/closed loops.

    Returns the data rows plus one summary row per value (medians and the
    fraction of strict closed-loop wins). Cells that raise are flushed as
    FAILED marker rows and the sweep continues.
    """
    rows: list[dict] = []
    for value in spec.values:
        cell_rows = []
        for seed in range(spec.seeds_per_cell):
            try:
                sc = scenario_variant(spec.scenario_doc, spec.dimension, value)
                closed = run_closed_loop(sc, seed).final_cost
                opened = run_open_loop(sc, seed).final_cost
            except Exception:
                rows.append({
                    "sweep_value": value, "seed": seed, "open_cost": "",
                    "closed_cost": "", "closed_minus_open": "FAILED", "win_rate": "",
                })
                continue
            row = {
                "sweep_value": value, "seed": seed, "open_cost": opened,
                "closed_cost": closed, "closed_minus_open": closed - opened,
                "win_rate": "",
            }
            rows.append(row)
            cell_rows.append(row)
        if cell_rows:
            opens = np.array([r["open_cost"] for r in cell_rows])
            closes = np.array([r["closed_cost"] for r in cell_rows])
            diffs = closes - opens
            rows.append({
                "sweep_value": value,
                "seed": "summary",
                "open_cost": float(np.median(opens)),
                "closed_cost": float(np.median(closes)),
                "closed_minus_open": float(np.median(diffs)),
                "win_rate": float(np.mean(diffs < 0)),
            })
    if spec.out_path is not None:
        write_sweep_csv(rows, spec.out_path)
    return rows


def write_sweep_csv(rows, target) -> None:
    own = isinstance(target, (str, bytes)) or hasattr(target, "__fspath__")
    fh = open(target, "w", newline="", encoding="utf-8") if own else target
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sweep_value", "seed", "open_cost", "closed_cost",
                    "closed_minus_open", "win_rate"])
        for r in rows:
            w.writerow([
                r["sweep_value"],
                r["seed"],
                _fmt(r["open_cost"]),
                _fmt(r["closed_cost"]),
                _fmt(r["closed_minus_open"]),
                _fmt(r["win_rate"]),
            ])
    finally:
        if own:
            fh.close()


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)
