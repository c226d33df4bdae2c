"""Report serialization: CSV with one header row, JSON with stable field
names, both round-tripping reals exactly (shortest repr, <= 17 significant
digits)."""

from __future__ import annotations

import json

import numpy as np

from .benchmarks import BenchRow
from .leastsquares import GridCell, GridResult, RunTrace


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write(path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def _csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Tabular views of each report type
# --------------------------------------------------------------------------

def _run_trace_table(trace: RunTrace):
    header = ["iteration", "loss"]
    columns = [np.arange(len(trace.losses)), trace.losses]
    if trace.grad_frobenius is not None:
        header += ["grad_frobenius", "grad_spectral", "grad_nuclear"]
        columns += [trace.grad_frobenius, trace.grad_spectral, trace.grad_nuclear]
    rows = [
        [int(columns[0][i])] + [float(col[i]) for col in columns[1:]]
        for i in range(len(trace.losses))
    ]
    return header, rows


def _grid_table(grid: GridResult):
    header = ["lr", "beta", "iters_to_threshold"]
    rows = [[c.lr, c.beta, c.iters_to_threshold] for c in grid.cells]
    return header, rows


_BENCH_FIELDS = [
    "rows", "cols", "k", "engine", "trials",
    "err1", "err2", "matvecs", "iterations", "wall_time", "converged",
]


def _bench_table(rows_in):
    rows = [[getattr(r, name) for name in _BENCH_FIELDS] for r in rows_in]
    return list(_BENCH_FIELDS), rows


def _points_table(points: np.ndarray):
    points = np.asarray(points, dtype=np.float64)
    header = ["x", "y", "z"][: points.shape[1]]
    return header, [[float(v) for v in row] for row in points]


def _to_table(data):
    if isinstance(data, RunTrace):
        return _run_trace_table(data)
    if isinstance(data, GridResult):
        return _grid_table(data)
    if isinstance(data, list) and all(isinstance(r, BenchRow) for r in data):
        return _bench_table(data)
    if isinstance(data, np.ndarray):
        return _points_table(data)
    raise TypeError(f"cannot serialize {type(data).__name__} as a report")


def _to_jsonable(data):
    if isinstance(data, RunTrace):
        out = {
            "losses": data.losses.tolist(),
            "iters_to_threshold": data.iters_to_threshold,
            "wall_time": data.wall_time,
            "diverged": data.diverged,
        }
        for name in ("grad_frobenius", "grad_spectral", "grad_nuclear"):
            arr = getattr(data, name)
            out[name] = None if arr is None else arr.tolist()
        return out
    if isinstance(data, GridResult):
        cell = lambda c: {"lr": c.lr, "beta": c.beta, "iters_to_threshold": c.iters_to_threshold}
        return {"cells": [cell(c) for c in data.cells], "best": cell(data.best)}
    if isinstance(data, list) and all(isinstance(r, BenchRow) for r in data):
        return [{name: getattr(r, name) for name in _BENCH_FIELDS} for r in data]
    if isinstance(data, np.ndarray):
        return np.asarray(data, dtype=np.float64).tolist()
    raise TypeError(f"cannot serialize {type(data).__name__} as a report")


def emit_report(data, format: str = "csv", path=None) -> None:
    """Write a RunTrace, GridResult, benchmark table, or point cloud to disk."""
    if format == "csv":
        header, rows = _to_table(data)
        _write(path, _csv_text(header, rows))
    elif format == "json":
        _write(path, json.dumps(_to_jsonable(data), indent=2) + "\n")
    else:
        raise ValueError(f"format must be 'csv' or 'json', got {format!r}")


# --------------------------------------------------------------------------
# Loaders (round-trip counterparts)
# --------------------------------------------------------------------------

def _cell_from_fields(lr: str, beta: str, iters: str) -> GridCell:
    return GridCell(
        lr=float(lr),
        beta=float(beta),
        iters_to_threshold=int(iters) if iters not in ("", "None") else None,
    )


def load_grid_result(path, format: str = "csv") -> GridResult:
    """Parse a grid report back; the best cell is recomputed from the cells
    for CSV (the tie-break is deterministic) and read directly from JSON."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read report from {path}: {exc}") from exc
    if format == "json":
        payload = json.loads(text)
        cells = [
            GridCell(lr=c["lr"], beta=c["beta"], iters_to_threshold=c["iters_to_threshold"])
            for c in payload["cells"]
        ]
        b = payload["best"]
        best = GridCell(lr=b["lr"], beta=b["beta"], iters_to_threshold=b["iters_to_threshold"])
        return GridResult(cells=cells, best=best)
    if format == "csv":
        lines = [line for line in text.splitlines() if line]
        if lines[0] != "lr,beta,iters_to_threshold":
            raise ValueError(f"unexpected grid header in {path}: {lines[0]!r}")
        cells = [_cell_from_fields(*line.split(",")) for line in lines[1:]]
        from .leastsquares import _cell_sort_key

        return GridResult(cells=cells, best=min(cells, key=_cell_sort_key))
    raise ValueError(f"format must be 'csv' or 'json', got {format!r}")


def load_matrix_csv(path) -> np.ndarray:
    """Plain comma-separated matrix, one row per line, no header."""
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except OSError as exc:
        raise OSError(f"cannot read matrix from {path}: {exc}") from exc


def save_matrix_csv(path, m: np.ndarray) -> None:
    m = np.asarray(m, dtype=np.float64)
    _write(path, "\n".join(",".join(repr(float(v)) for v in row) for row in m) + "\n")
