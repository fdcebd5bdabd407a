"""Karhunen-Loeve eigensystem of the OU bridge.

The covariance operator ``f -> int_0^T c(., t) f(t) dt`` of the bridge has
eigenpairs

    lambda_n = sigma**2 / (w_n**2 + theta**2)
    e_n(t)   = (T/2 - sin(2 w_n T) / (4 w_n))**(-1/2) * sin(w_n (t - T))

where ``w_n > 0`` are the increasingly sorted roots of the frequency equation

    R(w) = (sigma**2 - theta sigma0**2) sin(w T) + w sigma0**2 cos(w T) = 0.

The roots are located from the sign pattern of ``R``:

``DeterministicStart`` (sigma0 = 0)
    ``w_n = n pi / T``.
``CriticalRatio`` (sigma**2 = theta sigma0**2)
    ``w_n = (n - 1/2) pi / T``.
``SubCritical`` (theta sigma0**2 < sigma**2)
    one root in each ``](n - 1/2) pi/T, n pi/T[``.
``SuperCritical`` (theta sigma0**2 > sigma**2)
    one root in each ``]k pi/T, k pi/T + pi/(2T)[`` for ``k >= 1``, plus one
    leading mode whose type depends on ``d = sigma0**2 - T (theta sigma0**2 - sigma**2)``,
    the slope of ``R(w) / w`` at ``w = 0``:

    * ``d > 0``: an extra root in ``]0, pi/(2T)[``;
    * ``d = 0``: a linear eigenfunction ``t - T`` with ``lambda = sigma**2 / theta**2``;
    * ``d < 0``: a hyperbolic eigenfunction ``sinh(v (t - T))`` with
      ``lambda = sigma**2 / (theta**2 - v**2)``, ``v`` the positive root of
      ``(theta sigma0**2 - sigma**2) tanh(v T) = sigma0**2 v``.

    The last two modes carry the largest eigenvalue of the operator.  Note
    ``d > 0`` is not the same as ``sigma0**2 > theta sigma0**2 - sigma**2``
    unless ``T = 1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .ou_model import DomainError, OuParams

__all__ = [
    "FrequencyCase",
    "ModeKind",
    "Bracket",
    "KlMode",
    "KlBasis",
    "RootFindingError",
    "classify_case",
    "leading_slope",
    "frequency_residual",
    "frequency_brackets",
    "solve_frequencies",
    "eigenvalue",
    "eigenfunction_eval",
    "kl_basis",
]

CRITICAL_RTOL = 1e-14
# |d| below this fraction of (sigma0^2 + T |theta sigma0^2 - sigma^2|) -> linear mode
LINEAR_MODE_RTOL = 1e-12


class FrequencyCase(str, enum.Enum):
    DETERMINISTIC_START = "DeterministicStart"
    CRITICAL_RATIO = "CriticalRatio"
    SUB_CRITICAL = "SubCritical"
    SUPER_CRITICAL = "SuperCritical"


class ModeKind(str, enum.Enum):
    TRIG = "trig"
    LINEAR = "linear"
    HYPERBOLIC = "hyperbolic"


class RootFindingError(ArithmeticError):
    """No sign change of the frequency residual on a bracket."""

    def __init__(self, bracket, residuals, message=None):
        self.bracket = bracket
        self.residuals = residuals
        super().__init__(
            message
            or f"no sign change on bracket {bracket}: residuals at ends {residuals}"
        )


@dataclass(frozen=True)
class Bracket:
    """Open interval known to hold exactly one root.

    ``lower == upper`` marks a closed-form root.  For ``HYPERBOLIC`` brackets
    the interval is in the variable ``v`` of ``sinh(v (t - T))``.
    """

    n: int
    lower: float
    upper: float
    kind: ModeKind = ModeKind.TRIG

    @property
    def exact(self) -> bool:
        return self.lower == self.upper


@dataclass(frozen=True)
class KlMode:
    """One eigenpair.  ``omega`` is ``w_n`` (or ``v`` for a hyperbolic mode)."""

    n: int
    omega: float
    lam: float
    norm: float
    kind: ModeKind = ModeKind.TRIG
    residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "omega": self.omega,
            "lambda": self.lam,
            "norm": self.norm,
            "kind": self.kind.value,
            "residual": self.residual,
        }


def _sigma_terms(params: OuParams):
    s2 = params.sigma**2
    s02 = params.sigma0**2
    return s2, s02, s2 - params.theta * s02


def classify_case(params: OuParams) -> FrequencyCase:
    """Which branch of the frequency equation applies to ``params``."""
    s2, s02, slope = _sigma_terms(params)
    if params.sigma0 == 0:
        return FrequencyCase.DETERMINISTIC_START
    if abs(slope) <= CRITICAL_RTOL * (s2 + abs(params.theta) * s02):
        return FrequencyCase.CRITICAL_RATIO
    if slope > 0:
        return FrequencyCase.SUB_CRITICAL
    return FrequencyCase.SUPER_CRITICAL


def leading_slope(params: OuParams) -> float:
    """``lim_{w -> 0+} R(w) / w = sigma0**2 + T (sigma**2 - theta sigma0**2)``."""
    _, s02, slope = _sigma_terms(params)
    return s02 + params.T * slope


def frequency_residual(params: OuParams, w):
    """``R(w) = (sigma^2 - theta sigma0^2) sin(wT) + w sigma0^2 cos(wT)``."""
    _, s02, slope = _sigma_terms(params)
    wT = np.asarray(w, dtype=float) * params.T
    return slope * np.sin(wT) + w * s02 * np.cos(wT)


def _residual_scale(params: OuParams, w) -> float:
    _, s02, slope = _sigma_terms(params)
    return abs(slope) + abs(w) * s02


def _frequency_derivative(params: OuParams, w: float) -> float:
    _, s02, slope = _sigma_terms(params)
    T = params.T
    wT = w * T
    return (slope * T + s02) * math.cos(wT) - w * s02 * T * math.sin(wT)


def _hyperbolic_residual(params: OuParams, v: float) -> float:
    # (sigma^2 - theta sigma0^2) sinh(vT) + v sigma0^2 cosh(vT), divided by cosh(vT)
    _, s02, slope = _sigma_terms(params)
    return slope * math.tanh(v * params.T) + v * s02


def _leading_kind(params: OuParams) -> ModeKind:
    """Type of the first SuperCritical mode, from the residual sign near 0+."""
    _, s02, slope = _sigma_terms(params)
    d = leading_slope(params)
    if abs(d) <= LINEAR_MODE_RTOL * (s02 + params.T * abs(slope)):
        return ModeKind.LINEAR
    eps = 1e-9 * math.pi / (2 * params.T)
    r = float(frequency_residual(params, eps))
    if r == 0.0:
        r = d
    return ModeKind.TRIG if r > 0 else ModeKind.HYPERBOLIC


def frequency_brackets(params: OuParams, n_max: int) -> list[Bracket]:
    """Disjoint increasing brackets, one per eigenfrequency, for ``n = 1..n_max``."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    T = params.T
    pi = math.pi
    case = classify_case(params)
    out = []
    if case is FrequencyCase.DETERMINISTIC_START:
        for n in range(1, n_max + 1):
            w = n * pi / T
            out.append(Bracket(n, w, w))
    elif case is FrequencyCase.CRITICAL_RATIO:
        for n in range(1, n_max + 1):
            w = (n - 0.5) * pi / T
            out.append(Bracket(n, w, w))
    elif case is FrequencyCase.SUB_CRITICAL:
        for n in range(1, n_max + 1):
            out.append(Bracket(n, (n - 0.5) * pi / T, n * pi / T))
    else:
        kind = _leading_kind(params)
        if kind is ModeKind.TRIG:
            out.append(Bracket(1, 0.0, pi / (2 * T)))
        elif kind is ModeKind.LINEAR:
            out.append(Bracket(1, 0.0, 0.0, ModeKind.LINEAR))
        else:
            _, s02, slope = _sigma_terms(params)
            out.append(Bracket(1, 0.0, -slope / s02, ModeKind.HYPERBOLIC))
        for k in range(1, n_max):
            out.append(Bracket(k + 1, k * pi / T, (k + 0.5) * pi / T))
    return out


def _bisect_newton(f, df, lo, hi, width, bracket):
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise RootFindingError(bracket, (flo, fhi))
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(100):
        fx = f(x)
        if fx == 0.0:
            return x
        if (fx > 0) == (flo > 0):
            lo, flo = x, fx
        else:
            hi = x
        d = df(x) if df is not None else 0.0
        step = fx / d if d != 0.0 else math.inf
        x_new = x - step
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 4 * np.finfo(float).eps * max(abs(x), 1.0):
            return x_new
        if hi - lo <= 2 * np.finfo(float).eps * max(abs(hi), 1.0):
            return x_new
        x = x_new
    return x


def _anchored_residual(params: OuParams, anchor: float, m: int, sgn: float):
    """Residual and derivative in the offset ``delta`` with ``w = anchor + sgn * delta``.

    ``anchor = m pi / T`` so ``sin(wT)`` and ``cos(wT)`` reduce to exact signs
    times ``sin(delta T)``, ``cos(delta T)``.  This keeps full relative precision
    for roots lying very close to the anchor (tiny ``sigma0``).  The common
    factor ``(-1)^m`` is dropped.
    """
    _, s02, slope = _sigma_terms(params)
    T = params.T

    def f(delta):
        w = anchor + sgn * delta
        return sgn * slope * math.sin(delta * T) + w * s02 * math.cos(delta * T)

    def df(delta):
        w = anchor + sgn * delta
        c, sn = math.cos(delta * T), math.sin(delta * T)
        return sgn * (slope * T + s02) * c - w * s02 * T * sn

    return f, df


def _solve_bracket(params: OuParams, br: Bracket) -> float:
    if br.exact:
        return br.lower
    T = params.T
    width = 1e-3 * math.pi / T
    if br.kind is ModeKind.HYPERBOLIC:
        pad = 1e-9 * (br.upper - br.lower)
        width = min(width, 1e-3 * (br.upper - br.lower))
        return _bisect_newton(
            lambda v: _hyperbolic_residual(params, v), None, br.lower + pad, br.upper - pad, width, br
        )
    k = br.lower * T / math.pi
    if abs(k - round(k)) < 1e-9:
        anchor, sgn = br.lower, 1.0
    else:
        anchor, sgn = br.upper, -1.0
    m = round(anchor * T / math.pi)
    span = br.upper - br.lower
    f, df = _anchored_residual(params, anchor, m, sgn)
    # the anchored residual is positive at delta = 0 unless anchor = 0
    lo = 1e-9 * span if anchor == 0.0 else 0.0
    hi = span * (1 - 1e-9)
    delta = _bisect_newton(f, df, lo, hi, width, br)
    return anchor + sgn * delta


def solve_frequencies(params: OuParams, n_max: int) -> list[float]:
    """The first ``n_max`` eigenfrequencies (``v`` for a leading hyperbolic mode)."""
    return [float(_solve_bracket(params, br)) for br in frequency_brackets(params, n_max)]


def eigenvalue(omega: float, params: OuParams, kind: ModeKind = ModeKind.TRIG) -> float:
    """``sigma^2 / (omega^2 + theta^2)`` (``theta^2 - v^2`` for a hyperbolic mode)."""
    s2 = params.sigma**2
    th2 = params.theta**2
    if kind is ModeKind.TRIG:
        if omega <= 0:
            raise ValueError(f"omega must be > 0, got {omega}")
        return s2 / (omega**2 + th2)
    if kind is ModeKind.LINEAR:
        return s2 / th2
    return s2 / (th2 - omega**2)


def _y_minus_sin_y(y: float) -> float:
    if abs(y) < 0.1:
        y2 = y * y
        # Taylor series, truncation error < 1e-17 relative for |y| < 0.1
        return y * y2 / 6 * (1 - y2 / 20 * (1 - y2 / 42 * (1 - y2 / 72 * (1 - y2 / 110))))
    return y - math.sin(y)


def _trig_norm(omega: float, T: float) -> float:
    # T/2 - sin(2wT)/(4w) == (2wT - sin(2wT)) / (4w)
    return (_y_minus_sin_y(2 * omega * T) / (4 * omega)) ** -0.5


def _hyperbolic_scaled_norm(v: float, T: float) -> float:
    """Norm constant times ``exp(v T)``, finite for large ``v T``."""
    x = v * T
    em = math.exp(-2 * x)
    if x < 0.05:
        y2 = 4 * x * x
        # sinh(y) - y for y = 2x, by its Taylor series
        shy = 2 * x * y2 / 6 * (1 + y2 / 20 * (1 + y2 / 42 * (1 + y2 / 72)))
        sq = shy / (4 * v) * em
    else:
        # (sinh(2x) - 2x) / (4v) * e^{-2x}
        sq = (1 - em * em - 4 * x * em) / (8 * v)
    return sq**-0.5


def _make_mode(params: OuParams, n: int, omega: float, kind: ModeKind) -> KlMode:
    T = params.T
    lam = eigenvalue(omega, params, kind)
    if kind is ModeKind.TRIG:
        norm = _trig_norm(omega, T)
        res = float(frequency_residual(params, omega))
    elif kind is ModeKind.LINEAR:
        norm = (T**3 / 3) ** -0.5
        res = leading_slope(params)
    else:
        scaled = _hyperbolic_scaled_norm(omega, T)
        norm = scaled * math.exp(-omega * T) if omega * T < 700 else 0.0
        res = _hyperbolic_residual(params, omega)
    return KlMode(n=n, omega=omega, lam=lam, norm=norm, kind=kind, residual=res)


def eigenfunction_eval(mode: KlMode, params: OuParams, t):
    """Unit eigenfunction of ``mode`` at times ``t``; vanishes at ``t = T``."""
    t = np.asarray(t, dtype=float)
    T = params.T
    if np.any(t < 0) or np.any(t > T):
        raise DomainError(f"time outside [0, T={T}]")
    if mode.kind is ModeKind.TRIG:
        return mode.norm * np.sin(mode.omega * (t - T))
    if mode.kind is ModeKind.LINEAR:
        return mode.norm * (t - T)
    v = mode.omega
    scaled = _hyperbolic_scaled_norm(v, T)
    # sinh(v(t-T)) e^{-vT} = -(e^{-vt} - e^{-v(2T-t)}) / 2
    return -scaled * 0.5 * (np.exp(-v * t) - np.exp(-v * (2 * T - t)))


@dataclass(frozen=True)
class KlBasis:
    """The first ``m`` eigenpairs of the bridge covariance operator."""

    params: OuParams
    case: FrequencyCase
    modes: tuple[KlMode, ...] = field(default_factory=tuple)

    @property
    def m(self) -> int:
        return len(self.modes)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([md.lam for md in self.modes])

    @property
    def omegas(self) -> np.ndarray:
        return np.array([md.omega for md in self.modes])

    def truncate(self, m: int) -> "KlBasis":
        if not 1 <= m <= self.m:
            raise ValueError(f"cannot truncate basis of order {self.m} to {m}")
        return KlBasis(self.params, self.case, self.modes[:m])

    def evaluate(self, t) -> np.ndarray:
        """Matrix of shape ``(m, len(t))`` with ``e_n(t_k)`` in row ``n - 1``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([eigenfunction_eval(md, self.params, t) for md in self.modes])

    def covariance(self, s, t) -> np.ndarray:
        """Truncated Mercer sum ``sum_n lambda_n e_n(s) e_n(t)`` on the grid ``s x t``."""
        es = self.evaluate(s)
        et = self.evaluate(t)
        return (es * self.lambdas[:, None]).T @ et

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "case": self.case.value,
            "modes": [md.to_dict() for md in self.modes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KlBasis":
        params = OuParams(**data["params"])
        modes = tuple(
            KlMode(
                n=int(d["n"]),
                omega=float(d["omega"]),
                lam=float(d["lambda"]),
                norm=float(d["norm"]),
                kind=ModeKind(d.get("kind", "trig")),
                residual=float(d.get("residual", 0.0)),
            )
            for d in data["modes"]
        )
        return cls(params, FrequencyCase(data["case"]), modes)


def _check_boundary(params: OuParams, mode: KlMode) -> None:
    # g = sin(w(t - T)) (or its linear/hyperbolic analogue) must satisfy
    # sigma0^2 g'(0) = (sigma^2 - theta sigma0^2) g(0); sup|g| <= 1 after scaling
    _, s02, slope = _sigma_terms(params)
    T = params.T
    w = mode.omega
    if mode.kind is ModeKind.TRIG:
        g0, dg0 = -math.sin(w * T), w * math.cos(w * T)
    elif mode.kind is ModeKind.LINEAR:
        g0, dg0 = -1.0, 1.0 / T
    else:
        g0, dg0 = -math.tanh(w * T), w
    resid = abs(s02 * dg0 - slope * g0)
    if resid > 1e-10 * _residual_scale(params, max(w, 1.0 / T)):
        raise RootFindingError(
            (mode.n, w), (resid,), f"boundary condition violated for mode {mode.n}: {resid}"
        )


def kl_basis(params: OuParams, m: int) -> KlBasis:
    """Assemble the first ``m`` Karhunen-Loeve modes of the bridge."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    modes = []
    for br in frequency_brackets(params, m):
        if br.kind is ModeKind.LINEAR:
            omega = 0.0
        else:
            omega = float(_solve_bracket(params, br))
        mode = _make_mode(params, br.n, omega, br.kind)
        _check_boundary(params, mode)
        modes.append(mode)
    return KlBasis(params, classify_case(params), tuple(modes))
