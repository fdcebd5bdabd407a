"""Time grids and sampled paths shared by the simulators and the oracle."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

__all__ = ["TimeGrid", "BridgePath", "paths_to_csv"]


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing times from ``0`` to ``T`` inclusive."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a time grid needs at least two points")
        if pts[0] != 0.0:
            raise ValueError(f"grid must start at 0, got {pts[0]}")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, T: float, count: int) -> "TimeGrid":
        pts = np.linspace(0.0, T, count)
        pts[-1] = T
        return cls(pts)

    @property
    def T(self) -> float:
        return float(self.points[-1])

    @property
    def count(self) -> int:
        return self.points.size

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())

    def trapezoid_weights(self) -> np.ndarray:
        dt = np.diff(self.points)
        w = np.zeros_like(self.points)
        w[:-1] += dt / 2
        w[1:] += dt / 2
        return w


@dataclass(frozen=True, eq=False)
class BridgePath:
    """Values of one or many paths on a common grid.

    ``values`` has shape ``(count,)`` for a single path or ``(n_paths, count)``.
    """

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape[-1] != self.grid.count:
            raise ValueError(
                f"values have {vals.shape[-1]} columns, grid has {self.grid.count} points"
            )
        object.__setattr__(self, "values", vals)

    @property
    def n_paths(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[0]

    def as_matrix(self) -> np.ndarray:
        return np.atleast_2d(self.values)

    def to_json(self) -> dict:
        return {
            "t": self.grid.points.tolist(),
            "paths": self.as_matrix().tolist(),
        }


def paths_to_csv(path: BridgePath, probabilities=None) -> str:
    """Long-format CSV with columns ``t, value, path_id`` (and ``probability``)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["t", "value", "path_id"]
    if probabilities is not None:
        header.append("probability")
    writer.writerow(header)
    t = path.grid.points
    for pid, row in enumerate(path.as_matrix()):
        for tk, xk in zip(t, row):
            rec = [repr(float(tk)), repr(float(xk)), pid]
            if probabilities is not None:
                rec.append(repr(float(probabilities[pid])))
            writer.writerow(rec)
    return buf.getvalue()
