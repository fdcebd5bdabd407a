"""Oracle suite run by ``oubridge verify``.

Each check compares an analytic quantity against an independent route and
records the measured error next to its tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .bridge_sim import euler_noise_shape, simulate_euler
from .grid import TimeGrid
from .kl_solver import FrequencyCase, kl_basis
from .oracle import conditioned_kernel, nystrom_eigen
from .ou_model import BridgeSpec, OuParams, bridge_cov, bridge_mean, total_bridge_variance
from .quantizer import distortion, lloyd_1d

__all__ = ["Check", "REFERENCE_SETS", "mercer_tail", "run_verification"]

# (theta, sigma0^2) with sigma = 1, T = 1
REFERENCE_SETS = [(1.0, 0.5), (1.0, 2.0), (-0.5, 1.0), (0.0, 1.0)]


@dataclass
class Check:
    name: str
    measured: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: measured={self.measured:.3e} tol={self.tolerance:.1e}"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": self.measured,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def reference_params(theta: float, sigma0_sq: float, T: float = 1.0) -> OuParams:
    return OuParams(theta=theta, sigma=1.0, sigma0=math.sqrt(sigma0_sq), T=T)


def mercer_tail(params: OuParams, n_terms: int) -> float:
    """Asymptotic estimate of ``sum_{n > n_terms} lambda_n``.

    For large ``n`` the frequencies approach ``(n - c) pi / T`` with ``c = 0``
    for a deterministic start and ``c = 1/2`` otherwise, so the tail is close to
    ``sigma^2 T^2 / pi^2 * psi'(n_terms + 1 - c)``.
    """
    c = 0.0 if params.sigma0 == 0 else 0.5
    return params.sigma**2 * params.T**2 / math.pi**2 * float(
        special.polygamma(1, n_terms + 1 - c)
    )


def _check(name, measured, tol) -> Check:
    return Check(name, float(measured), float(tol), bool(measured <= tol))


def run_verification(
    sets=REFERENCE_SETS,
    nystrom_grid: int = 2000,
    n_paths: int = 100_000,
    euler_grid: int = 1025,
    seed: int = 0,
    corrupt_lambda: float = 0.0,
) -> list[Check]:
    """Run every oracle check; ``corrupt_lambda`` scales analytic eigenvalues by ``1 + corrupt_lambda``."""
    checks = []

    # Brownian bridge closed forms
    bb = OuParams(theta=0.0, sigma=1.0, T=1.0)
    basis = kl_basis(bb, 20)
    n = np.arange(1, 21)
    err = max(
        np.max(np.abs(basis.omegas / (n * np.pi) - 1)),
        np.max(np.abs(basis.lambdas * (1 + corrupt_lambda) * (n * np.pi) ** 2 - 1)),
    )
    checks.append(_check("brownian bridge spectrum (rel)", err, 1e-10))
    g = np.linspace(0, 1, 50)
    S, T_ = np.meshgrid(g, g, indexing="ij")
    err = np.max(np.abs(bridge_cov(bb, S, T_) - (np.minimum(S, T_) - S * T_)))
    checks.append(_check("brownian bridge covariance", err, 1e-10))

    for theta, s02 in sets:
        p = reference_params(theta, s02)
        tag = f"theta={theta:g}, sigma0^2={s02:g}"
        grid = TimeGrid.uniform(p.T, 100)
        K = conditioned_kernel(p, grid)
        t = grid.points
        err = np.max(np.abs(K.matrix - bridge_cov(p, t[:, None], t[None, :])))
        checks.append(_check(f"kernel consistency [{tag}]", err, 1e-10))

        lam = kl_basis(p, 5).lambdas * (1 + corrupt_lambda)
        ny, _ = nystrom_eigen(conditioned_kernel(p, TimeGrid.uniform(p.T, nystrom_grid)), 5)
        checks.append(_check(f"nystrom eigenvalues [{tag}]", np.max(np.abs(lam / ny - 1)), 5e-3))

        n_terms = 2000
        total = kl_basis(p, n_terms).lambdas.sum() * (1 + corrupt_lambda)
        trace = total_bridge_variance(p)
        err = abs(total + mercer_tail(p, n_terms) - trace) / trace
        checks.append(_check(f"mercer trace, tail-corrected [{tag}]", err, 1e-6))

    # Euler simulator against the exact law
    spec = BridgeSpec(OuParams(theta=1.0, sigma=1.0, T=1.0), 1.0)
    grid = TimeGrid.uniform(1.0, euler_grid)
    rng = np.random.Generator(np.random.Philox(seed))
    paths = simulate_euler(spec, grid, rng.standard_normal(euler_noise_shape(grid, n_paths)))
    cols = [int(np.argmin(np.abs(grid.points - s))) for s in (0.25, 0.5, 0.75)]
    X = paths.values[:, cols]
    tt = grid.points[cols]
    mean = X.mean(axis=0)
    D = X - mean
    z_mean = np.abs(mean - bridge_mean(spec, tt)) / (X.std(axis=0, ddof=1) / math.sqrt(n_paths))
    C = D.T @ D / (n_paths - 1)
    se_C = np.array(
        [[np.std(D[:, i] * D[:, j], ddof=1) for j in range(3)] for i in range(3)]
    ) / math.sqrt(n_paths)
    z_cov = np.abs(C - bridge_cov(spec.params, tt[:, None], tt[None, :])) / se_C
    checks.append(_check("euler law: mean (z-score)", np.max(z_mean), 3.0))
    checks.append(_check("euler law: covariance (z-score)", np.max(z_cov), 3.0))
    checks.append(_check("euler pinning", np.max(np.abs(paths.values[:, -1] - spec.z)), 0.0))

    # Lloyd anchors
    cb = lloyd_1d(2)
    a = math.sqrt(2 / math.pi)
    checks.append(_check("lloyd N=2 codepoints", np.max(np.abs(np.abs(cb.points[:, 0]) - a)), 1e-6))
    est, se = distortion(cb, [1.0], 1_000_000, seed=np.random.Generator(np.random.Philox(seed + 1)))
    checks.append(_check("lloyd N=2 distortion (z-score)", abs(est - (1 - 2 / math.pi)) / max(se, 1e-300), 3.0))
    return checks


def summary_case(params: OuParams) -> FrequencyCase:
    return kl_basis(params, 1).case
