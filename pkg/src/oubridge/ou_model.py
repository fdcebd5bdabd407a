"""Closed-form moments of the Ornstein-Uhlenbeck process and its bridge.

The process solves ``dX_t = theta (mu - X_t) dt + sigma dW_t`` on ``[0, T]``
with an independent Gaussian start ``X_0 ~ N(x0, sigma0**2)``.  The bridge is
the same process conditioned on ``X_T = z``.

All covariance evaluations go through two helpers,

* ``h(m) = (1 - exp(-2 theta m)) / (2 theta)``  (variance accumulated over a
  lag ``m`` by the stochastic integral), and
* ``g(m) = expm1(2 theta m) / (2 theta) = exp(2 theta m) h(m)``,

which are both equal to ``m`` at ``theta = 0``.  Written in terms of them the
bridge covariance for ``s <= t`` factors as

    c(s, t) = exp(-theta (t - s)) v(s) sigma**2 h(T - t) / v(T)       (theta >= 0)
            = exp( theta (t - s)) u(s) sigma**2 g(T - t) / u(T)       (theta <  0)

with ``v(s) = sigma0**2 exp(-2 theta s) + sigma**2 h(s)`` the unconditioned
variance and ``u(s) = exp(2 theta s) v(s)``.  Every exponential in these forms
has a non-positive argument, so nothing overflows for large ``|theta| T`` and
there is no cancellation as ``theta -> 0``.  The expression is algebraically
identical to the textbook ``k(s,t) - k(s,T) k(t,T) / k(T,T)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

__all__ = [
    "OuParams",
    "BridgeSpec",
    "DomainError",
    "QuadratureError",
    "process_mean",
    "process_var",
    "process_cov",
    "bridge_cov",
    "bridge_mean",
    "total_bridge_variance",
]

# |theta| T below this switches to the theta = 0 formulas.
THETA_ZERO_TOL = 1e-10


class DomainError(ValueError):
    """Raised when a time argument falls outside ``[0, T]``."""


class QuadratureError(ArithmeticError):
    """Raised when adaptive quadrature fails to reach its tolerance."""


@dataclass(frozen=True)
class OuParams:
    """Parameters of the OU process and of the Gaussian prior on ``X_0``.

    ``theta`` may be negative (mean repulsion) or zero (scaled Brownian motion).
    """

    theta: float = 1.0
    mu: float = 0.0
    sigma: float = 1.0
    sigma0: float = 0.0
    x0: float = 0.0
    T: float = 1.0

    def __post_init__(self):
        for name in ("theta", "mu", "sigma", "sigma0", "x0", "T"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma!r}")
        if self.T <= 0:
            raise ValueError(f"T must be > 0, got {self.T!r}")
        if self.sigma0 < 0:
            raise ValueError(f"sigma0 must be >= 0, got {self.sigma0!r}")

    @property
    def is_brownian(self) -> bool:
        return abs(self.theta) * self.T < THETA_ZERO_TOL

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "mu": self.mu,
            "sigma": self.sigma,
            "sigma0": self.sigma0,
            "x0": self.x0,
            "T": self.T,
        }


@dataclass(frozen=True)
class BridgeSpec:
    """An OU process conditioned on its terminal value ``X_T = z``."""

    params: OuParams
    z: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.z):
            raise ValueError(f"z must be finite, got {self.z!r}")

    @property
    def is_centered(self) -> bool:
        """True in the zero-start regime: ``mu = x0 = sigma0 = 0``."""
        p = self.params
        return p.mu == 0 and p.x0 == 0 and p.sigma0 == 0

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "z": self.z}


def _check_time(params: OuParams, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > params.T) or np.any(np.isnan(t)):
        raise DomainError(f"time outside [0, T={params.T}]: {t!r}")
    return t


def _h(params: OuParams, m):
    """``(1 - exp(-2 theta m)) / (2 theta)``, equal to ``m`` at theta = 0."""
    if params.is_brownian:
        return np.asarray(m, dtype=float)
    th = params.theta
    return -np.expm1(-2.0 * th * m) / (2.0 * th)


def _g(params: OuParams, m):
    """``expm1(2 theta m) / (2 theta)``, equal to ``m`` at theta = 0."""
    if params.is_brownian:
        return np.asarray(m, dtype=float)
    th = params.theta
    return np.expm1(2.0 * th * m) / (2.0 * th)


def _decay(params: OuParams, t):
    if params.is_brownian:
        return np.ones_like(np.asarray(t, dtype=float))
    return np.exp(-params.theta * t)


def process_mean(params: OuParams, t):
    """Mean ``x0 e^{-theta t} + mu (1 - e^{-theta t})`` of the unconditioned process."""
    t = _check_time(params, t)
    if params.is_brownian:
        return params.x0 + 0.0 * t
    return params.x0 * np.exp(-params.theta * t) - params.mu * np.expm1(-params.theta * t)


def process_var(params: OuParams, t):
    """Variance of the unconditioned process at time ``t``."""
    t = _check_time(params, t)
    return params.sigma0**2 * _decay(params, 2.0 * t) + params.sigma**2 * _h(params, t)


def process_cov(params: OuParams, s, t):
    """Covariance ``Cov(X_s, X_t)`` of the unconditioned process.

    For theta != 0 this equals
    ``e^{-theta(s+t)} ((2 theta sigma0^2 - sigma^2) + sigma^2 e^{2 theta min(s,t)}) / (2 theta)``
    and ``sigma0^2 + sigma^2 min(s, t)`` at theta = 0.
    """
    s = _check_time(params, s)
    t = _check_time(params, t)
    lo = np.minimum(s, t)
    hi = np.maximum(s, t)
    return _decay(params, hi - lo) * process_var(params, lo)


def _u(params: OuParams, s):
    # exp(2 theta s) * Var(X_s); bounded for theta < 0
    return params.sigma0**2 + params.sigma**2 * _g(params, s)


def bridge_cov(params: OuParams, s, t):
    """Covariance of the OU bridge, ``Cov(X_s, X_t | X_T)``.

    Vectorised over broadcastable ``s`` and ``t``.  Exactly symmetric and exactly
    zero when either argument equals ``T``.
    """
    s = _check_time(params, s)
    t = _check_time(params, t)
    lo = np.minimum(s, t)
    hi = np.maximum(s, t)
    T = params.T
    sig2 = params.sigma**2
    if params.theta >= 0 or params.is_brownian:
        v_lo = params.sigma0**2 * _decay(params, 2.0 * lo) + sig2 * _h(params, lo)
        v_T = params.sigma0**2 * _decay(params, 2.0 * T) + sig2 * _h(params, T)
        out = _decay(params, hi - lo) * v_lo * (sig2 * _h(params, T - hi)) / v_T
    else:
        growth = np.exp(params.theta * (hi - lo))
        out = growth * _u(params, lo) * (sig2 * _g(params, T - hi)) / _u(params, T)
    return out


def _gain(params: OuParams, t):
    """Regression coefficient ``Cov(X_t, X_T) / Var(X_T)``."""
    T = params.T
    if params.theta >= 0 or params.is_brownian:
        v_t = process_var(params, t)
        v_T = process_var(params, T)
        return _decay(params, T - t) * v_t / v_T
    return np.exp(params.theta * (T - t)) * _u(params, t) / _u(params, T)


def bridge_mean(spec: BridgeSpec, t):
    """Conditional mean ``E[X_t | X_T = z]``; returns ``z`` exactly at ``t = T``."""
    params = spec.params
    t = _check_time(params, t)
    m_T = process_mean(params, params.T)
    out = process_mean(params, t) + _gain(params, t) * (spec.z - m_T)
    return np.where(t == params.T, spec.z, out)


def total_bridge_variance(params: OuParams, tol: float = 1e-12) -> float:
    """``int_0^T Var(X_t | X_T) dt`` by adaptive Gauss-Kronrod quadrature.

    Equal to the trace of the covariance operator, i.e. the sum of all
    Karhunen-Loeve eigenvalues.
    """
    def f(t):
        return float(bridge_cov(params, t, t))

    value, abserr, info = integrate.quad(
        f, 0.0, params.T, epsabs=tol, epsrel=tol, limit=500, full_output=True
    )[:3]
    if abserr > max(tol, tol * abs(value)) * 10:
        raise QuadratureError(
            f"quadrature did not converge: value={value!r}, error estimate={abserr!r}, "
            f"evaluations={info['neval']}, params={params!r}"
        )
    return float(value)
