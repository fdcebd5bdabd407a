"""Brute-force cross-checks built only from the unconditioned process.

Nothing here evaluates the closed-form bridge covariance: the dense kernel is
obtained by Gaussian conditioning of ``process_cov`` on the terminal value, so
agreement with :func:`oubridge.ou_model.bridge_cov` is an independent check.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .grid import BridgePath, TimeGrid
from .ou_model import OuParams, process_cov

__all__ = [
    "DenseKernel",
    "EigenSolverError",
    "conditioned_kernel",
    "nystrom_eigen",
    "empirical_cov",
]

PSD_RTOL = 1e-9


class EigenSolverError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class DenseKernel:
    grid: TimeGrid
    matrix: np.ndarray

    def min_eigen_ratio(self) -> float:
        """Smallest eigenvalue divided by the largest (absolute)."""
        ev = linalg.eigvalsh(self.matrix)
        top = np.max(np.abs(ev))
        return float(ev[0] / top) if top > 0 else 0.0

    def is_psd(self, rtol: float = PSD_RTOL) -> bool:
        return self.min_eigen_ratio() >= -rtol

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "t", "value"])
        pts = self.grid.points
        for i, s in enumerate(pts):
            for j, t in enumerate(pts):
                w.writerow([repr(float(s)), repr(float(t)), repr(float(self.matrix[i, j]))])
        return buf.getvalue()


def conditioned_kernel(params: OuParams, grid: TimeGrid) -> DenseKernel:
    """Bridge covariance on ``grid`` by a rank-one update of the process kernel.

    ``C - c_T c_T^T / Var(X_T)`` where ``C`` is the unconditioned covariance on
    the grid and ``c_T`` its covariance with ``X_T``.
    """
    if grid.count > 4000:
        raise ValueError("conditioned_kernel supports at most 4000 grid points")
    if not np.isclose(grid.T, params.T, rtol=0, atol=1e-12 * params.T):
        raise ValueError(f"grid ends at {grid.T}, horizon is {params.T}")
    t = grid.points
    C = process_cov(params, t[:, None], t[None, :])
    c_T = process_cov(params, t, params.T)
    var_T = float(process_cov(params, params.T, params.T))
    K = C - np.outer(c_T, c_T) / var_T
    K = 0.5 * (K + K.T)
    return DenseKernel(grid, K)


def nystrom_eigen(kernel: DenseKernel, m: int):
    """Top ``m`` eigenpairs of the covariance operator by trapezoid Nystrom.

    Returns ``(lambdas, vectors)`` with ``lambdas`` decreasing and ``vectors``
    of shape ``(m, count)`` normalised so that ``sum_k w_k v(t_k)**2 = 1``.
    """
    n = kernel.grid.count
    if not 1 <= m <= n:
        raise ValueError(f"m must be in [1, {n}], got {m}")
    w = kernel.grid.trapezoid_weights()
    sw = np.sqrt(w)
    A = sw[:, None] * kernel.matrix * sw[None, :]
    try:
        vals, vecs = linalg.eigh(A, subset_by_index=[n - m, n - 1])
    except linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order].T
    # back to function values; zero-weight points cannot occur on a proper grid
    funcs = vecs / sw[None, :]
    # fix signs so that the value at t = 0 side is deterministic
    signs = np.sign(funcs[:, np.argmax(np.abs(funcs), axis=1)].diagonal())
    signs[signs == 0] = 1.0
    return vals, funcs * signs[:, None]


def empirical_cov(paths) -> tuple[DenseKernel, np.ndarray]:
    """Unbiased sample covariance and sample mean of paths on a common grid.

    ``paths`` is a :class:`BridgePath` holding many paths or a sequence of them.
    """
    if isinstance(paths, BridgePath):
        grid = paths.grid
        X = paths.as_matrix()
    else:
        paths = list(paths)
        if not paths:
            raise ValueError("need at least two paths")
        grid = paths[0].grid
        for p in paths[1:]:
            if p.grid != grid:
                raise ValueError("paths live on different grids")
        X = np.vstack([p.as_matrix() for p in paths])
    if X.shape[0] < 2:
        raise ValueError("need at least two paths")
    mean = X.mean(axis=0)
    D = X - mean
    S = D.T @ D / (X.shape[0] - 1)
    return DenseKernel(grid, S), mean
