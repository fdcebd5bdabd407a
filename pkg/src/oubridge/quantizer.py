"""Optimal functional quantization of the OU bridge.

A size-``N`` quantizer of the bridge is built in Karhunen-Loeve coordinates:
the expansion is truncated at order ``m`` and the Gaussian vector
``G ~ N(0, diag(lambda_1, ..., lambda_m))`` of the first coordinates is
quantized.  The squared error splits as

    E_N^2 = sum_{j > m} lambda_j + E_N(G)^2

and the truncation order ``d(N)`` is the ``m`` minimising it.  Each codepoint
``a`` maps to the path ``bridge_mean(t) + sum_j a_j e_j(t)``.

For ``m = 1`` the Gaussian codebook is computed deterministically (closed-form
cell moments plus Newton on the stationarity equations).  For ``m >= 2`` Lloyd
runs on a fixed antithetic Monte-Carlo sample, so its distortion decreases
monotonically on that sample; reported errors always come from a fresh sample.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import linalg, special

from .grid import BridgePath, TimeGrid
from .kl_solver import KlBasis, kl_basis
from .ou_model import BridgeSpec, bridge_mean, total_bridge_variance

__all__ = [
    "Codebook",
    "DistortionReport",
    "FunctionalQuantizer",
    "RateStudy",
    "default_mc_budget",
    "lloyd_1d",
    "lloyd",
    "clvq",
    "distortion",
    "exact_distortion_1d",
    "cell_statistics",
    "nearest",
    "select_dimension",
    "functional_quantizer",
    "rate_check",
]

MAX_ITER = 1000


@dataclass(eq=False)
class Codebook:
    """``N`` codepoints in ``R^m`` with the probability mass of their cells.

    ``distortion`` is the mean squared error on the measure the codebook was
    optimised for (exact for ``m = 1``, the training sample otherwise).
    """

    points: np.ndarray
    probabilities: np.ndarray
    distortion: float = float("nan")
    iterations: int = 0
    reseeds: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        probs = np.asarray(self.probabilities, dtype=float)
        if probs.shape != (pts.shape[0],):
            raise ValueError("one probability per codepoint is required")
        if np.any(probs < 0) or np.any(probs > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        total = probs.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, not 1")
        self.points = pts
        self.probabilities = probs / total

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "points": self.points.tolist(),
            "probabilities": self.probabilities.tolist(),
            "distortion": self.distortion,
            "iterations": self.iterations,
            "reseeds": self.reseeds,
        }


@dataclass
class DistortionReport:
    """Squared quantization error at truncation order ``m``.

    ``total_sq`` is fixed at construction as ``tail + finite_dim_error_sq``.
    ``se`` is the Monte-Carlo standard error of ``finite_dim_error_sq``.
    """

    m: int
    tail: float
    finite_dim_error_sq: float
    se: float = 0.0
    total_sq: float = field(init=False)
    codebook: Codebook | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.tail < 0:
            # trace minus partial eigen-sum can dip below 0 by rounding only
            if self.tail < -1e-12:
                raise ValueError(f"negative tail {self.tail}")
            self.tail = 0.0
        if self.finite_dim_error_sq < 0:
            raise ValueError("negative distortion")
        self.total_sq = self.tail + self.finite_dim_error_sq

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "tail": self.tail,
            "finite_dim_error_sq": self.finite_dim_error_sq,
            "se": self.se,
            "total_sq": self.total_sq,
        }


def default_mc_budget(m: int) -> int:
    return int(1_000_000 * min(1.0, 4.0 / m))


# ---------------------------------------------------------------------------
# one-dimensional Gaussian, deterministic


def _cell_prob(lo, hi):
    # P(lo < Z < hi) without cancellation in either tail
    upper = lo > 0
    p = np.where(upper, special.ndtr(-lo) - special.ndtr(-hi), special.ndtr(hi) - special.ndtr(lo))
    return p


def _pdf(x):
    with np.errstate(over="ignore"):
        return np.where(np.isfinite(x), np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi), 0.0)


def _xpdf(x):
    return np.where(np.isfinite(x), x * _pdf(np.where(np.isfinite(x), x, 0.0)), 0.0)


def _boundaries(x):
    b = 0.5 * (x[:-1] + x[1:])
    lo = np.concatenate(([-np.inf], b))
    hi = np.concatenate((b, [np.inf]))
    return lo, hi


def _lobe_moments(x):
    """Cell probabilities and conditional means of ``N(0, 1)`` for sorted ``x``."""
    lo, hi = _boundaries(x)
    P = _cell_prob(lo, hi)
    num = _pdf(lo) - _pdf(hi)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(P > 0, num / P, x)
    return lo, hi, P, c


def _distortion_std(x) -> float:
    lo, hi, P, _ = _lobe_moments(x)
    # int_lo^hi (z - x)^2 phi = P - (hi phi(hi) - lo phi(lo)) - 2x(phi(lo) - phi(hi)) + x^2 P
    second = P - (_xpdf(hi) - _xpdf(lo))
    first = _pdf(lo) - _pdf(hi)
    return float(np.sum(second - 2 * x * first + x * x * P))


def exact_distortion_1d(points, variance: float) -> float:
    """``E[min_i (G - x_i)^2]`` for ``G ~ N(0, variance)``, in closed form."""
    s = math.sqrt(variance)
    x = np.sort(np.asarray(points, dtype=float).ravel()) / s
    return variance * _distortion_std(x)


def _newton_step(x):
    lo, hi, P, c = _lobe_moments(x)
    G = x - c
    phi_lo, phi_hi = _pdf(lo), _pdf(hi)
    with np.errstate(invalid="ignore"):
        dc_dl = np.where(np.isfinite(lo), phi_lo * (c - np.where(np.isfinite(lo), lo, 0)) / P, 0.0)
        dc_du = np.where(np.isfinite(hi), phi_hi * (np.where(np.isfinite(hi), hi, 0) - c) / P, 0.0)
    n = x.size
    # Jacobian of G: I - dc/dx, tridiagonal
    diag = 1.0 - 0.5 * (dc_dl + dc_du)
    upper = -0.5 * dc_du[:-1]
    lower = -0.5 * dc_dl[1:]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return G, linalg.solve_banded((1, 1), ab, G)


def lloyd_1d(N: int, variance: float = 1.0, init=None, tol: float = 1e-12, max_iter: int = MAX_ITER) -> Codebook:
    """Optimal ``N``-point quantizer of ``N(0, variance)``.

    Starts from ``init`` (default: Gaussian quantiles of rank ``(i - 1/2) / N``)
    and iterates Newton on ``x = E[Z | Z in cell(x)]`` with a Lloyd step as a
    fallback whenever Newton would not decrease the distortion.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if variance <= 0:
        raise ValueError("variance must be > 0")
    s = math.sqrt(variance)
    if init is None:
        x = special.ndtri((np.arange(1, N + 1) - 0.5) / N)
    else:
        pts = init.points if isinstance(init, Codebook) else init
        x = np.sort(np.asarray(pts, dtype=float).ravel()) / s
        if x.size != N:
            raise ValueError(f"initial codebook has {x.size} points, expected {N}")
    if N == 1:
        x = np.zeros(1)
        return Codebook(x[:, None], np.ones(1), variance, 0, 0)
    D = _distortion_std(x)
    it = 0
    for it in range(1, max_iter + 1):
        G, step = _newton_step(x)
        if np.max(np.abs(G)) <= tol:
            break
        cand = x - step
        ok = np.all(np.diff(cand) > 0) and np.all(np.isfinite(cand))
        D_new = _distortion_std(cand) if ok else np.inf
        if D_new > D + 1e-15:
            # Lloyd step: move to centroids
            cand = _lobe_moments(x)[3]
            D_new = _distortion_std(cand)
        x, D = cand, D_new
    _, _, P, _ = _lobe_moments(x)
    return Codebook((s * x)[:, None], P / P.sum(), variance * _distortion_std(x), it, 0)


# ---------------------------------------------------------------------------
# multi-dimensional, sample based


@njit(cache=True)
def _assign_kernel(X, PT, idx, d2):
    n, m = X.shape
    N = PT.shape[1]
    buf = np.empty(N)
    for r in range(n):
        for i in range(N):
            buf[i] = 0.0
        for j in range(m):
            x = X[r, j]
            for i in range(N):
                diff = x - PT[j, i]
                buf[i] += diff * diff
        best = 0
        bd = buf[0]
        for i in range(1, N):
            if buf[i] < bd:
                bd = buf[i]
                best = i
        idx[r] = best
        d2[r] = bd


def nearest(samples: np.ndarray, points: np.ndarray):
    """Index of the closest codepoint (lowest index on ties) and squared distance."""
    X = np.ascontiguousarray(samples, dtype=float)
    PT = np.ascontiguousarray(np.asarray(points, dtype=float).T)
    idx = np.empty(X.shape[0], dtype=np.intp)
    d2 = np.empty(X.shape[0])
    _assign_kernel(X, PT, idx, d2)
    return idx, d2


def _gaussian_sample(variances, size: int, rng: np.random.Generator, antithetic: bool = True):
    m = len(variances)
    sd = np.sqrt(np.asarray(variances, dtype=float))
    if antithetic:
        half = rng.standard_normal(((size + 1) // 2, m))
        Z = np.concatenate([half, -half])[:size]
    else:
        Z = rng.standard_normal((size, m))
    return Z * sd


def _product_init(variances, N: int) -> np.ndarray:
    """Highest-probability ``N`` points of a product of 1-D optimal codebooks."""
    variances = np.asarray(variances, dtype=float)
    m = variances.size
    cache: dict[int, Codebook] = {}

    def book(n):
        if n not in cache:
            cache[n] = lloyd_1d(n)
        return cache[n]

    sizes = [1] * m
    while math.prod(sizes) < N:
        gains = [
            variances[j] * (book(sizes[j]).distortion - book(sizes[j] + 1).distortion)
            for j in range(m)
        ]
        sizes[int(np.argmax(gains))] += 1
    sd = np.sqrt(variances)
    axes = [book(n).points[:, 0] for n in sizes]
    probs = [book(n).probabilities for n in sizes]
    combos = list(itertools.product(*[range(n) for n in sizes]))
    p = np.array([math.prod(probs[j][c[j]] for j in range(m)) for c in combos])
    # stable sort keeps lexicographic order among equal probabilities
    order = np.argsort(-p, kind="stable")[:N]
    pts = np.array([[axes[j][combos[k][j]] * sd[j] for j in range(m)] for k in order])
    return pts


def _centroids(samples, idx, N):
    counts = np.bincount(idx, minlength=N).astype(float)
    sums = np.stack(
        [np.bincount(idx, weights=samples[:, j], minlength=N) for j in range(samples.shape[1])],
        axis=1,
    )
    return counts, sums


@njit(cache=True)
def _lloyd_pass(X, PT, idx, d2, counts, sums):
    """Assign every sample, accumulate cell sums; return (sum of d2, #changed)."""
    n, m = X.shape
    N = PT.shape[1]
    buf = np.empty(N)
    counts[:] = 0.0
    sums[:, :] = 0.0
    total = 0.0
    changed = 0
    for r in range(n):
        for i in range(N):
            buf[i] = 0.0
        for j in range(m):
            x = X[r, j]
            for i in range(N):
                diff = x - PT[j, i]
                buf[i] += diff * diff
        best = 0
        bd = buf[0]
        for i in range(1, N):
            if buf[i] < bd:
                bd = buf[i]
                best = i
        if idx[r] != best:
            changed += 1
        idx[r] = best
        d2[r] = bd
        total += bd
        counts[best] += 1.0
        for j in range(m):
            sums[best, j] += X[r, j]
    return total, changed


def _empirical_lloyd(samples, points, tol, max_iter):
    X = np.ascontiguousarray(samples, dtype=float)
    points = np.array(points, dtype=float)
    N, m = points.shape
    M = X.shape[0]
    idx = np.full(M, -1, dtype=np.intp)
    d2 = np.empty(M)
    counts = np.empty(N)
    sums = np.empty((N, m))
    reseeds = 0
    total, _ = _lloyd_pass(X, np.ascontiguousarray(points.T), idx, d2, counts, sums)
    D = total / M
    it = 0
    for it in range(1, max_iter + 1):
        empty = np.nonzero(counts == 0)[0]
        live = counts > 0
        points[live] = sums[live] / counts[live, None]
        if empty.size:
            # splitting rule: send each dead point to the worst-served sample
            far = np.argsort(-d2, kind="stable")[: empty.size]
            points[empty] = X[far]
            reseeds += int(empty.size)
        total, changed = _lloyd_pass(X, np.ascontiguousarray(points.T), idx, d2, counts, sums)
        D_new = total / M
        rel = (D - D_new) / D if D > 0 else 0.0
        D = D_new
        if empty.size:
            continue
        if changed == 0 or rel < tol:
            break
    return points, counts / M, D, it, reseeds


def _as_variances(variances):
    v = np.atleast_1d(np.asarray(variances, dtype=float))
    if v.ndim != 1 or v.size < 1:
        raise ValueError("variances must be a non-empty 1-D sequence")
    if np.any(v <= 0):
        raise ValueError("all variances must be > 0")
    return v


def lloyd(
    variances,
    N: int,
    init=None,
    mc_budget: int | None = None,
    tol: float = 1e-8,
    seed: int | np.random.Generator | None = 0,
    max_iter: int = MAX_ITER,
    sample: np.ndarray | None = None,
) -> Codebook:
    """Lloyd's algorithm for ``N(0, diag(variances))``.

    ``init`` may be a :class:`Codebook` or an array of starting points.  For a
    single variance the deterministic 1-D solver is used.  Otherwise Lloyd runs
    on ``sample`` (scaled draws, one row per point) or on ``mc_budget``
    antithetic draws generated from ``seed``.
    """
    v = _as_variances(variances)
    if N < 1:
        raise ValueError("N must be >= 1")
    if v.size == 1 and sample is None:
        return lloyd_1d(N, float(v[0]), init=init, tol=min(tol, 1e-12), max_iter=max_iter)
    if init is None:
        start = _product_init(v, N)
    else:
        start = init.points if isinstance(init, Codebook) else np.asarray(init, dtype=float)
        start = np.atleast_2d(start).reshape(N, v.size)
    if sample is None:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        sample = _gaussian_sample(v, mc_budget or default_mc_budget(v.size), rng)
    pts, probs, D, it, reseeds = _empirical_lloyd(sample, start, tol, max_iter)
    return Codebook(pts, probs, D, it, reseeds)


def _clvq_kernel_py(points, samples, k0, gamma0, A):
    N, m = points.shape
    for r in range(samples.shape[0]):
        best = 0
        bd = np.inf
        for i in range(N):
            d = 0.0
            for j in range(m):
                diff = samples[r, j] - points[i, j]
                d += diff * diff
            if d < bd:
                bd = d
                best = i
        g = gamma0 * A / (A + k0 + r)
        for j in range(m):
            points[best, j] += g * (samples[r, j] - points[best, j])


_clvq_kernel = njit(cache=True)(_clvq_kernel_py)


def clvq(
    variances,
    N: int,
    steps: int = 1_000_000,
    gamma0: float = 0.5,
    A: float = 1e4,
    seed: int | np.random.Generator | None = 0,
    init=None,
    mc_budget: int | None = None,
    refine_iter: int = 10,
) -> Codebook:
    """Competitive learning vector quantization with ``gamma_k = gamma0 A / (A + k)``.

    Each step draws one point and pulls its nearest codepoint towards it.  The
    result is polished by ``refine_iter`` Lloyd iterations.
    """
    v = _as_variances(variances)
    if N < 1 or steps < 1:
        raise ValueError("N and steps must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if init is None:
        if v.size == 1:
            pts = (np.sqrt(v[0]) * special.ndtri((np.arange(1, N + 1) - 0.5) / N))[:, None]
        else:
            pts = _product_init(v, N)
    else:
        pts = init.points if isinstance(init, Codebook) else np.asarray(init, dtype=float)
    pts = np.array(pts, dtype=float).reshape(N, v.size)
    sd = np.sqrt(v)
    block = 100_000
    for k0 in range(0, steps, block):
        n = min(block, steps - k0)
        X = rng.standard_normal((n, v.size)) * sd
        _clvq_kernel(pts, X, k0, gamma0, A)
    if refine_iter <= 0:
        if v.size == 1:
            D = exact_distortion_1d(pts, float(v[0]))
            _, _, P, _ = _lobe_moments(np.sort(pts[:, 0]) / sd[0])
            return Codebook(np.sort(pts[:, 0])[:, None], P, D, steps, 0)
        sample = _gaussian_sample(v, mc_budget or default_mc_budget(v.size), rng)
        idx, d2 = nearest(sample, pts)
        probs = np.bincount(idx, minlength=N) / sample.shape[0]
        return Codebook(pts, probs, float(d2.mean()), steps, 0)
    if v.size == 1:
        x = np.sort(pts[:, 0]) / sd[0]
        for _ in range(refine_iter):
            x = _lobe_moments(x)[3]
        _, _, P, _ = _lobe_moments(x)
        return Codebook((sd[0] * x)[:, None], P, v[0] * _distortion_std(x), steps + refine_iter, 0)
    sample = _gaussian_sample(v, mc_budget or default_mc_budget(v.size), rng)
    pts, probs, D, it, reseeds = _empirical_lloyd(sample, pts, 0.0, refine_iter)
    return Codebook(pts, probs, D, steps + it, reseeds)


def distortion(
    codebook: Codebook,
    variances,
    eval_budget: int = 1_000_000,
    seed=None,
    control_variate: bool = True,
):
    """Monte-Carlo ``E[min_a |G - a|^2]`` on fresh draws; returns ``(estimate, se)``.

    With ``control_variate`` the known ``E|G|^2 = sum(variances)`` is used and
    only the quantization gain ``|G|^2 - min_a |G - a|^2`` is sampled, which
    removes the noise contributed by directions the codebook does not resolve.
    """
    v = _as_variances(variances)
    if codebook.dim != v.size:
        raise ValueError(f"codebook has dimension {codebook.dim}, variances {v.size}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    n = 0
    block = 250_000
    while n < eval_budget:
        k = min(block, eval_budget - n)
        X = _gaussian_sample(v, k, rng, antithetic=False)
        _, y = nearest(X, codebook.points)
        if control_variate:
            y = y - np.einsum("ij,ij->i", X, X)
        total += float(y.sum())
        total_sq += float(np.dot(y, y))
        n += k
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    if control_variate:
        mean += float(v.sum())
    return max(mean, 0.0), math.sqrt(var / n)


def cell_statistics(codebook: Codebook, variances, eval_budget: int = 1_000_000, seed=None):
    """Fresh-sample cell probabilities and conditional means with standard errors.

    Returns ``(probs, probs_se, means, means_se)``; empty cells get NaN means.
    """
    v = _as_variances(variances)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    X = _gaussian_sample(v, eval_budget, rng, antithetic=False)
    idx, _ = nearest(X, codebook.points)
    N = codebook.size
    counts, sums = _centroids(X, idx, N)
    sq = np.stack(
        [np.bincount(idx, weights=X[:, j] ** 2, minlength=N) for j in range(v.size)], axis=1
    )
    probs = counts / eval_budget
    probs_se = np.sqrt(probs * (1 - probs) / eval_budget)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = sums / counts[:, None]
        var = sq / counts[:, None] - means**2
        means_se = np.sqrt(np.maximum(var, 0) / counts[:, None])
    return probs, probs_se, means, means_se


# ---------------------------------------------------------------------------
# functional quantization


def select_dimension(
    basis: KlBasis,
    N: int,
    m_max: int | None = None,
    trace: float | None = None,
    mc_budget: int | None = None,
    eval_budget: int | None = None,
    seed: int = 0,
    tol: float = 1e-8,
    tie_se: float = 2.0,
):
    """Exhaustive search of the truncation order ``d`` in ``1..m_max``.

    For every ``m`` the ``m``-dimensional Gaussian is quantized by Lloyd and
    ``tail + error^2`` is recorded.  Returns ``(d, reports)``.

    Since ``tail + E|G|^2 = trace`` for every ``m``, the total error is
    ``trace - gain_m`` with ``gain_m = E[|G|^2 - min_a |G - a|^2]``.  Gains are
    estimated on one shared evaluation sample (exactly for ``m = 1``), so orders
    are compared through paired differences.  An order counts as tied with the
    minimiser when its paired excess is within ``tie_se`` standard errors, and
    ties go to the smaller ``m``.  ``tie_se = 0`` gives the plain argmin.
    """
    m_max = basis.m if m_max is None else m_max
    if m_max < 1 or m_max > basis.m:
        raise ValueError(f"m_max must be in [1, {basis.m}]")
    if N < 1:
        raise ValueError("N must be >= 1")
    lam = basis.lambdas[:m_max]
    if trace is None:
        trace = total_bridge_variance(basis.params)
    partial = np.cumsum(lam)
    ss = np.random.SeedSequence(seed)
    train_ss, eval_ss = ss.spawn(2)
    budget = mc_budget or default_mc_budget(1)
    ev_budget = eval_budget or budget
    eval_std = _gaussian_sample(
        np.ones(m_max), ev_budget, np.random.default_rng(eval_ss), antithetic=False
    )
    train_std = None
    reports = []
    losses = []
    for m in range(1, m_max + 1):
        tail = float(trace - partial[m - 1])
        v = lam[:m]
        sd = np.sqrt(v)
        Xe = eval_std[:, :m] * sd
        if N == 1:
            cb = Codebook(np.zeros((1, m)), np.ones(1), float(partial[m - 1]))
            fd, se = float(partial[m - 1]), 0.0
            loss = np.zeros(ev_budget)
        elif m == 1:
            cb = lloyd_1d(N, float(v[0]))
            fd, se = cb.distortion, 0.0
            _, d2 = nearest(Xe, cb.points)
            loss = d2 - Xe[:, 0] ** 2
        else:
            if train_std is None:
                train_std = _gaussian_sample(
                    np.ones(m_max), budget, np.random.default_rng(train_ss)
                )
            rows = mc_budget or default_mc_budget(m)
            cb = lloyd(v, N, sample=train_std[:rows, :m] * sd, tol=tol)
            _, d2 = nearest(Xe, cb.points)
            loss = d2 - np.einsum("ij,ij->i", Xe, Xe)
            fd = max(float(partial[m - 1] + loss.mean()), 0.0)
            se = float(loss.std(ddof=1) / math.sqrt(loss.size))
        reports.append(DistortionReport(m, tail, fd, se, codebook=cb))
        losses.append(loss)
    totals = np.array([r.total_sq for r in reports])
    best = int(np.argmin(totals))
    d = best + 1
    for k in range(best):
        diff = losses[k] - losses[best]
        excess = totals[k] - totals[best]
        se_pair = float(diff.std(ddof=1) / math.sqrt(diff.size)) if diff.size > 1 else 0.0
        if excess <= tie_se * se_pair + 1e-12 * trace:
            d = k + 1
            break
    return d, reports


@dataclass(eq=False)
class FunctionalQuantizer:
    """``N`` representative bridge paths with their probabilities."""

    spec: BridgeSpec
    basis: KlBasis
    codebook: Codebook
    report: DistortionReport
    reports: list = field(default_factory=list)

    def __post_init__(self):
        if self.codebook.dim != self.basis.m:
            raise ValueError("codebook dimension must equal the basis order")

    @property
    def N(self) -> int:
        return self.codebook.size

    @property
    def d(self) -> int:
        return self.basis.m

    @property
    def probabilities(self) -> np.ndarray:
        return self.codebook.probabilities

    def paths(self, grid: TimeGrid | int = 201) -> BridgePath:
        if isinstance(grid, int):
            grid = TimeGrid.uniform(self.spec.params.T, grid)
        t = grid.points
        mean = bridge_mean(self.spec, t)
        E = self.basis.evaluate(t)
        vals = mean[None, :] + self.codebook.points @ E
        return BridgePath(grid, vals)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "basis": self.basis.to_dict(),
            "d": self.d,
            "codebook": self.codebook.to_dict(),
            "report": self.report.to_dict(),
            "reports": [r.to_dict() for r in self.reports],
        }


def functional_quantizer(
    spec: BridgeSpec,
    N: int,
    m_max: int = 10,
    mc_budget: int | None = None,
    eval_budget: int | None = None,
    seed: int = 0,
    tol: float = 1e-6,
) -> FunctionalQuantizer:
    """Optimal ``N``-path quantizer of the bridge ``spec``."""
    basis = kl_basis(spec.params, m_max)
    trace = total_bridge_variance(spec.params)
    d, reports = select_dimension(
        basis, N, m_max, trace=trace, mc_budget=mc_budget, eval_budget=eval_budget, seed=seed, tol=tol
    )
    rep = reports[d - 1]
    return FunctionalQuantizer(spec, basis.truncate(d), rep.codebook, rep, reports)


@dataclass
class RateStudy:
    N: np.ndarray
    error: np.ndarray
    se: np.ndarray
    dims: np.ndarray
    slope: float
    K: float

    def to_dict(self) -> dict:
        return {
            "N": self.N.tolist(),
            "E_N": self.error.tolist(),
            "se": self.se.tolist(),
            "d": self.dims.tolist(),
            "slope": self.slope,
            "K": self.K,
        }


def rate_check(
    spec: BridgeSpec,
    N_values,
    m_max: int = 8,
    mc_budget: int | None = 200_000,
    eval_budget: int | None = 200_000,
    seed: int = 0,
    tol: float = 1e-6,
) -> RateStudy:
    """Fit ``log E_N = log K - s log log N`` over ``N_values``.

    Returns the fitted slope (``-s``) and ``K = E_N sqrt(log N)`` at the largest
    ``N``.
    """
    Ns = np.asarray(list(N_values), dtype=int)
    if Ns.size < 4:
        raise ValueError("rate_check needs at least 4 values of N")
    if np.any(Ns < 2) or np.any(np.diff(Ns) <= 0):
        raise ValueError("N values must be increasing and >= 2")
    basis = kl_basis(spec.params, m_max)
    trace = total_bridge_variance(spec.params)
    errs, ses, dims = [], [], []
    for N in Ns:
        d, reports = select_dimension(
            basis, int(N), m_max, trace=trace, mc_budget=mc_budget,
            eval_budget=eval_budget, seed=seed, tol=tol,
        )
        r = reports[d - 1]
        e = math.sqrt(r.total_sq)
        errs.append(e)
        ses.append(r.se / (2 * e))
        dims.append(d)
    errs = np.array(errs)
    slope = float(np.polyfit(np.log(np.log(Ns)), np.log(errs), 1)[0])
    K = float(errs[-1] * math.sqrt(math.log(Ns[-1])))
    return RateStudy(Ns, errs, np.array(ses), np.array(dims), slope, K)
