"""CSV and JSON persistence.

Floats are written with 17 significant digits in CSV and as ``repr`` in
JSON; both round-trip binary64 exactly.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BadGrid
from .geometry import ConformalMetric, QSGridMetric, RadialMetric
from .grids import RadialGrid

SCHEMA_VERSION = 1


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return "" if x is None else str(x)


def write_csv(path, rows: Iterable[dict], columns: Sequence[str]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row.get(c)) for c in columns])
    return path


def read_csv(path) -> tuple:
    """(header, float array with one column per header entry)."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
    return header, data.reshape(-1, len(header))


def infer_grid(nodes) -> RadialGrid:
    """Uniform or geometric grid reproducing ``nodes`` to 1e-12 relative."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size < 16:
        raise BadGrid("need at least 16 nodes")
    for spacing in ("uniform", "geometric"):
        g = RadialGrid(nodes[0], nodes[-1], nodes.size, spacing)
        if np.allclose(g.nodes, nodes, rtol=1e-12, atol=0.0):
            return g
    raise BadGrid("nodes are neither uniformly nor geometrically spaced")


def metric_rows(metric) -> tuple:
    """(rows, columns) for exporting a metric profile."""
    if isinstance(metric, RadialMetric):
        return [{"r": r, "u": u} for r, u in zip(metric.r, metric.u)], ("r", "u")
    if isinstance(metric, ConformalMetric):
        return [{"rho": r, "phi": p} for r, p in zip(metric.rho, metric.phi)], ("rho", "phi")
    if isinstance(metric, QSGridMetric):
        # angular mean as the radial profile, with its spread
        mean = np.array([metric.sgrid.mean(row) for row in metric.u])
        rows = [
            {"r": r, "u": m, "u_min": lo, "u_max": hi}
            for r, m, lo, hi in zip(metric.r, mean, metric.u.min(axis=1), metric.u.max(axis=1))
        ]
        return rows, ("r", "u", "u_min", "u_max")
    raise TypeError(f"cannot export {type(metric).__name__}")


def write_metric_csv(path, metric) -> Path:
    rows, cols = metric_rows(metric)
    return write_csv(path, rows, cols)


def read_metric_csv(path):
    """RadialMetric from ``r,u`` columns or ConformalMetric from ``rho,phi``.

    Extra columns (``V`` from static fits, the angular spread of
    quasi-spherical extensions) are ignored.  Derivatives are not
    stored, so the result interpolates with cubic splines.
    """
    header, data = read_csv(path)
    if header[:2] == ["r", "u"]:
        return RadialMetric(infer_grid(data[:, 0]), data[:, 1])
    if header[:2] == ["rho", "phi"]:
        return ConformalMetric(infer_grid(data[:, 0]), data[:, 1])
    raise ValueError(f"unrecognised metric columns {header}")


def _plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def to_json(payload: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION}
    doc.update(_plain(payload))
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(to_json(payload))
    return path


def read_json(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
    return doc
