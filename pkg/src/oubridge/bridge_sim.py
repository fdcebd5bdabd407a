"""Sampling OU-bridge paths.

Two samplers are provided.  :func:`simulate_euler` discretises the bridge SDE

    dX_t = (-theta coth(theta (T - t)) X_t + theta z / sinh(theta (T - t))) dt + sigma dW_t

for a centered process started at 0 (``(z - X_t) / (T - t)`` drift when
theta = 0).  General parameters are handled by drawing the start from its
conditional law and shifting (:func:`reduce_random_start`,
:func:`simulate_bridge`).  :func:`simulate_exact` draws from the exact
finite-dimensional Gaussian law and serves as the reference sampler.

Both consume caller-supplied standard normal noise, so a fixed noise array
gives a bit-identical path.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
from scipy import linalg

from .grid import BridgePath, TimeGrid
from .ou_model import (
    BridgeSpec,
    DomainError,
    OuParams,
    bridge_cov,
    bridge_mean,
    process_mean,
)

__all__ = [
    "TimeGrid",
    "BridgePath",
    "StabilityError",
    "IndefiniteCovarianceError",
    "bridge_drift",
    "drift_coefficients",
    "simulate_euler",
    "reduce_random_start",
    "simulate_bridge",
    "simulate_exact",
    "euler_noise_shape",
    "exact_noise_shape",
]


class StabilityError(ValueError):
    """The Euler step is too coarse for the mean-reverting part of the drift."""


class IndefiniteCovarianceError(ArithmeticError):
    pass


def drift_coefficients(theta: float, tau):
    """``(a, b)`` with drift ``-a x + b z`` at time-to-maturity ``tau > 0``.

    ``a = theta coth(theta tau)`` and ``b = theta / sinh(theta tau)``; both tend
    to ``1 / tau`` as theta -> 0.  Written via ``q = exp(-2 |theta| tau)``:
    ``a = |theta| (1 + q) / (1 - q)`` and ``b = 2 |theta| sqrt(q) / (1 - q)``.
    """
    tau = np.asarray(tau, dtype=float)
    x = abs(theta) * tau
    small = x < 1e-6
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        q = np.exp(-2.0 * x)
        one_minus_q = -np.expm1(-2.0 * x)
        a = abs(theta) * (1.0 + q) / one_minus_q
        b = 2.0 * abs(theta) * np.sqrt(q) / one_minus_q
        # series in x for tiny |theta| tau
        a_s = (1.0 + x * x / 3.0) / tau
        b_s = (1.0 - x * x / 6.0) / tau
    a = np.where(small, a_s, a)
    b = np.where(small, b_s, b)
    return a, b


def bridge_drift(spec: BridgeSpec, x, t):
    """Drift of the centered, zero-start bridge at state ``x`` and time ``t < T``."""
    T = spec.params.T
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t >= T):
        raise DomainError(f"bridge drift requires 0 <= t < T={T}, got {t!r}")
    a, b = drift_coefficients(spec.params.theta, T - t)
    return -a * np.asarray(x, dtype=float) + b * spec.z


def euler_noise_shape(grid: TimeGrid, n_paths: int | None = None) -> tuple:
    """Noise shape for :func:`simulate_euler`: one draw per Euler step.

    The last grid interval is not integrated (the endpoint is pinned), so a grid
    of ``count`` points needs ``count - 2`` draws per path.
    """
    k = grid.count - 2
    return (k,) if n_paths is None else (n_paths, k)


def exact_noise_shape(grid: TimeGrid, n_paths: int | None = None) -> tuple:
    """Noise shape for :func:`simulate_exact`: one draw per non-terminal point."""
    k = grid.count - 1
    return (k,) if n_paths is None else (n_paths, k)


def _check_grid(spec: BridgeSpec, grid: TimeGrid):
    if not math.isclose(grid.T, spec.params.T, rel_tol=0, abs_tol=1e-12 * spec.params.T):
        raise ValueError(f"grid ends at {grid.T}, horizon is {spec.params.T}")


def simulate_euler(spec: BridgeSpec, grid: TimeGrid, noise) -> BridgePath:
    """Euler-Maruyama for the centered zero-start bridge pinned at ``spec.z``.

    ``noise`` has shape ``(..., count - 2)``; leading axes index independent
    paths.  Steps ``t_0 -> ... -> t_{count-2}`` are integrated and the final
    value is set to ``z``.
    """
    p = spec.params
    if not spec.is_centered:
        raise ValueError(
            "simulate_euler needs mu = x0 = sigma0 = 0; use simulate_bridge for general parameters"
        )
    _check_grid(spec, grid)
    noise = np.asarray(noise, dtype=float)
    n_steps = grid.count - 2
    if noise.shape[-1] != n_steps:
        raise ValueError(f"noise must have {n_steps} draws per path, got {noise.shape[-1]}")
    t = grid.points
    dt = np.diff(t)[:n_steps]
    tau = p.T - t[:n_steps]
    a, b = drift_coefficients(p.theta, tau)
    bad = np.nonzero(a * dt >= 1.0)[0]
    if bad.size:
        k = int(bad[0])
        raise StabilityError(
            f"step {k} (t={t[k]:.6g}, dt={dt[k]:.3g}) has theta*coth*dt={a[k] * dt[k]:.3g} >= 1; "
            "refine the grid near T"
        )
    sdt = p.sigma * np.sqrt(dt)
    out = np.empty(noise.shape[:-1] + (grid.count,))
    x = np.zeros(noise.shape[:-1])
    out[..., 0] = x
    z = spec.z
    for k in range(n_steps):
        x = x + (b[k] * z - a[k] * x) * dt[k] + sdt[k] * noise[..., k]
        out[..., k + 1] = x
    out[..., -1] = z
    return BridgePath(grid, out)


def reduce_random_start(spec: BridgeSpec, u):
    """Draw ``X_0 | X_T = z`` from standard normal(s) ``u`` and centre the endpoint.

    Returns ``(x0_draw, z_centered)`` with
    ``z_centered = z - x0_draw e^{-theta T} - mu (1 - e^{-theta T})``.  The bridge
    path is then ``x0_draw e^{-theta t} + mu (1 - e^{-theta t})`` plus a centered
    zero-start bridge ending at ``z_centered``.
    """
    p = spec.params
    u = np.asarray(u, dtype=float)
    if p.sigma0 == 0:
        x0_draw = np.full(u.shape, p.x0)
    else:
        m0 = float(bridge_mean(spec, 0.0))
        v0 = float(bridge_cov(p, 0.0, 0.0))
        x0_draw = m0 + math.sqrt(max(v0, 0.0)) * u
    if p.is_brownian:
        decay_T, shift_T = 1.0, 0.0
    else:
        decay_T = math.exp(-p.theta * p.T)
        shift_T = -p.mu * math.expm1(-p.theta * p.T)
    z_centered = spec.z - x0_draw * decay_T - shift_T
    if x0_draw.ndim == 0:
        return float(x0_draw), float(z_centered)
    return x0_draw, z_centered


def _centered_spec(spec: BridgeSpec) -> BridgeSpec:
    p = replace(spec.params, mu=0.0, x0=0.0, sigma0=0.0)
    return BridgeSpec(p, 0.0)


def simulate_bridge(spec: BridgeSpec, grid: TimeGrid, start_noise, path_noise) -> BridgePath:
    """Euler simulation for arbitrary parameters via the random-start reduction.

    ``start_noise`` has shape ``batch`` and ``path_noise`` shape
    ``batch + (count - 2,)``.  Since the centered Euler scheme is linear in its
    endpoint, each path is ``D(t) + Y(t) + z_c * phi(t)`` where ``D`` is the
    deterministic part, ``Y`` the Euler path pinned at 0 and ``phi`` the noiseless
    Euler path pinned at 1.
    """
    p = spec.params
    _check_grid(spec, grid)
    start_noise = np.asarray(start_noise, dtype=float)
    x0_draw, z_c = reduce_random_start(spec, start_noise)
    x0_draw = np.asarray(x0_draw, dtype=float)
    z_c = np.asarray(z_c, dtype=float)
    base = _centered_spec(spec)
    y = simulate_euler(base, grid, path_noise).values
    phi = simulate_euler(
        BridgeSpec(base.params, 1.0), grid, np.zeros(euler_noise_shape(grid))
    ).values
    t = grid.points
    if p.is_brownian:
        decay = np.ones_like(t)
        shift = np.zeros_like(t)
    else:
        decay = np.exp(-p.theta * t)
        shift = -p.mu * np.expm1(-p.theta * t)
    vals = (
        x0_draw[..., None] * decay
        + shift
        + y
        + z_c[..., None] * phi
    )
    vals[..., -1] = spec.z
    return BridgePath(grid, vals)


def _bridge_factor(spec: BridgeSpec, grid: TimeGrid) -> np.ndarray:
    t = grid.points[:-1]
    C = bridge_cov(spec.params, t[:, None], t[None, :])
    vals, vecs = linalg.eigh(C)
    top = max(abs(vals[-1]), 1e-300)
    if vals[0] < -1e-9 * top:
        raise IndefiniteCovarianceError(
            f"bridge covariance indefinite: min eigenvalue {vals[0]:.3e}, max {top:.3e}"
        )
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def simulate_exact(spec: BridgeSpec, grid: TimeGrid, noise) -> BridgePath:
    """Exact draw from the Gaussian law of the bridge on ``grid``.

    ``noise`` has shape ``(..., count - 1)``.  Uses a symmetric square root of
    the covariance of the non-terminal points, which tolerates the singular
    row at ``t = 0`` when ``sigma0 = 0``.
    """
    if grid.count > 2000:
        raise ValueError("simulate_exact supports at most 2000 grid points")
    _check_grid(spec, grid)
    noise = np.asarray(noise, dtype=float)
    if noise.shape[-1] != grid.count - 1:
        raise ValueError(f"noise must have {grid.count - 1} draws per path")
    L = _bridge_factor(spec, grid)
    mean = bridge_mean(spec, grid.points)
    out = np.empty(noise.shape[:-1] + (grid.count,))
    out[..., :-1] = mean[:-1] + noise @ L.T
    out[..., -1] = spec.z
    return BridgePath(grid, out)


def euler_grid_ok(params: OuParams, grid: TimeGrid) -> bool:
    """Whether :func:`simulate_euler` accepts ``grid`` for these parameters."""
    t = grid.points[:-2]
    dt = np.diff(grid.points)[:-1]
    a, _ = drift_coefficients(params.theta, params.T - t)
    return bool(np.all(a * dt < 1.0))
