"""Readers for the benchmark harness's delimited text outputs.

Three file kinds are consumed, all comma-delimited with a header row:

* regret curves  -- ``t,algo,graph,n_nodes,d,L,measure,C,mean_regret,
  std_regret,mean_reward,n_seeds``
* sweep summaries -- ``param,value,algo,final_mean_regret,final_std_regret,
  n_seeds``
* bounds tables  -- ``param,value,upper_bound,lower_bound``

This package talks to the harness only through these files, so the readers
are self-contained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CURVE_COLUMNS = [
    "t", "algo", "graph", "n_nodes", "d", "L", "measure", "C",
    "mean_regret", "std_regret", "mean_reward", "n_seeds",
]
SUMMARY_COLUMNS = ["param", "value", "algo", "final_mean_regret",
                   "final_std_regret", "n_seeds"]
BOUNDS_COLUMNS = ["param", "value", "upper_bound", "lower_bound"]


class SchemaError(ValueError):
    pass


@dataclass
class Curve:
    algo: str
    graph: str
    measure: str
    C: float
    n_seeds: int
    t: np.ndarray
    mean_regret: np.ndarray
    std_regret: np.ndarray
    mean_reward: np.ndarray


@dataclass
class Summary:
    param: str
    values: np.ndarray
    algos: list[str]
    final_mean: np.ndarray
    final_std: np.ndarray


@dataclass
class BoundsTable:
    param: str
    values: np.ndarray
    upper: np.ndarray
    lower: np.ndarray


def _read_rows(path: str, columns: list[str]) -> list[list[str]]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        for want in columns:
            if want not in header:
                raise SchemaError(f"{path}: missing column {want!r}")
        if header != columns:
            raise SchemaError(f"{path}: unexpected column order {header}")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    for i, row in enumerate(rows, start=2):
        if len(row) != len(columns):
            raise SchemaError(f"{path}:{i}: expected {len(columns)} fields")
    return rows


def read_curve(path: str) -> Curve:
    rows = _read_rows(path, CURVE_COLUMNS)
    first = rows[0]
    return Curve(
        algo=first[1],
        graph=first[2],
        measure=first[6],
        C=float(first[7]),
        n_seeds=int(first[11]),
        t=np.array([int(r[0]) for r in rows]),
        mean_regret=np.array([float(r[8]) for r in rows]),
        std_regret=np.array([float(r[9]) for r in rows]),
        mean_reward=np.array([float(r[10]) for r in rows]),
    )


def read_summary(path: str) -> Summary:
    rows = _read_rows(path, SUMMARY_COLUMNS)
    return Summary(
        param=rows[0][0],
        values=np.array([float(r[1]) for r in rows]),
        algos=[r[2] for r in rows],
        final_mean=np.array([float(r[3]) for r in rows]),
        final_std=np.array([float(r[4]) for r in rows]),
    )


def read_bounds(path: str) -> BoundsTable:
    rows = _read_rows(path, BOUNDS_COLUMNS)
    return BoundsTable(
        param=rows[0][0],
        values=np.array([float(r[1]) for r in rows]),
        upper=np.array([float(r[2]) for r in rows]),
        lower=np.array([float(r[3]) for r in rows]),
    )
