"""Closed-form expectations of the test-function families under the diagonal laws.

Each family factorizes over modes, so its expectation has the form
``prefactor * exp(-sum_m psi(q_m, m))`` with ``q_m`` the mode variances of the
law.  Differences between two laws are summed termwise, which keeps weak
errors accurate far below the size of the expectations themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np
from scipy import integrate, special

from .series import DEFAULT_POLICY, ZERO, Asymptote, SeriesPolicy, sum_series
from .spectral_model import PI2, Law, eigenvalue, mode_variance, support, variance_asymptote

F_PRIME_0 = math.sqrt(2.0 / math.pi)

# Taylor coefficients of f at 0, orders 1..7.
_F_TAYLOR = (
    0.79788456080286535588,
    -0.18169011381620932846,
    0.036335602357498360115,
    -0.0047821117522591190687,
    -0.000036980737188481841574,
    0.00021202574144674573625,
    -0.000052160001839763418049,
)
_F_SERIES_CUT = 0.02


def f_exp_abs(theta):
    """``f(theta) = -log E[exp(-theta |Z|)]`` for a standard normal ``Z``.

    Uses ``E[exp(-theta|Z|)] = erfcx(theta / sqrt(2))``, which never overflows,
    and a Taylor polynomial near 0 where ``erfcx`` is too close to 1.
    """
    th = np.asarray(theta, dtype=np.float64)
    if np.any(th < 0) or np.any(np.isnan(th)):
        raise ValueError("theta must be nonnegative")
    small = th < _F_SERIES_CUT
    out = -np.log(special.erfcx(th / math.sqrt(2.0)))
    if np.any(small):
        ts = np.where(small, th, 0.0)
        poly = np.zeros_like(ts)
        for c in reversed(_F_TAYLOR):
            poly = (poly + c) * ts
        out = np.where(small, poly, out)
    return float(out) if out.ndim == 0 else out


# -- test functions -------------------------------------------------------------


def _lam(dim):
    return eigenvalue(np.arange(1, dim + 1))


@dataclass(frozen=True)
class Phi1:
    """``exp(-eps |P_M x|_{1/4}^2)``."""

    eps: float
    M: int

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.M < 1:
            raise ValueError("M must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        m = min(self.M, x.shape[-1])
        w = np.sqrt(_lam(m))
        return np.exp(-self.eps * (x[..., :m] ** 2 @ w))


@dataclass(frozen=True)
class Phi2:
    """``exp(i sqrt(2M) <theta_M, x>)`` with ``theta_M = sum_{m=M/2}^{M} e_m``.

    The frequency ``sqrt(2M)`` makes the expectation under a centered law
    ``exp(-M sum_{m=M/2}^{M} q_m)``.  Evaluation returns complex values;
    expectations under centered laws are real.
    """

    M: int

    def __post_init__(self):
        if self.M < 2 or self.M % 2:
            raise ValueError(f"Phi2 needs an even M >= 2, got {self.M}")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        lo, hi = self.M // 2, min(self.M, x.shape[-1])
        s = x[..., lo - 1:hi].sum(axis=-1) if hi >= lo else np.zeros(x.shape[:-1])
        return np.exp(1j * math.sqrt(2.0 * self.M) * s)


def lipschitz_normalization(alpha: float) -> float:
    """``L_alpha = 1 + (sum_m lambda_m^(-2 alpha))^(1/2)``, finite for alpha > 1/4."""
    if not alpha > 0.25:
        raise ValueError("L_alpha needs alpha > 1/4")
    return 1.0 + math.sqrt(float(special.zeta(4 * alpha)) / math.pi ** (4 * alpha))


@dataclass(frozen=True)
class Phi3:
    """``exp(-sum_{m>=M} |x_m| / lambda_m^alpha) / L_alpha``: bounded, Lipschitz, not smooth."""

    alpha: float
    M: int = 1

    def __post_init__(self):
        if not 0.25 < self.alpha <= 0.5:
            raise ValueError(f"alpha must lie in (1/4, 1/2], got {self.alpha}")
        if self.M < 1:
            raise ValueError("M must be positive")

    @property
    def normalization(self) -> float:
        return lipschitz_normalization(self.alpha)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        dim = x.shape[-1]
        if dim < self.M:
            return np.full(x.shape[:-1], 1.0 / self.normalization)
        w = _lam(dim)[self.M - 1:] ** (-self.alpha)
        return np.exp(-(np.abs(x[..., self.M - 1:]) @ w)) / self.normalization


@dataclass(frozen=True)
class GaussExp:
    """``exp(-|x|^2)``; a smooth representative with bounded derivatives."""

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.exp(-np.sum(x * x, axis=-1))


TestFunction = Union[Phi1, Phi2, Phi3, GaussExp]


# -- closed forms -----------------------------------------------------------------


class _LogSeries(NamedTuple):
    log_prefactor: float
    psi: Callable[[Law, np.ndarray], np.ndarray]
    start: int
    stop: int | None
    asymptote: Callable[[Law], Asymptote]


def _log_series(fn: TestFunction) -> _LogSeries:
    if isinstance(fn, Phi1):
        def psi(law, n):
            return 0.5 * np.log1p(2.0 * fn.eps * np.sqrt(eigenvalue(n)) * mode_variance(law, n))

        return _LogSeries(0.0, psi, 1, fn.M, lambda law: ZERO)
    if isinstance(fn, Phi2):
        def psi(law, n):
            return fn.M * np.asarray(mode_variance(law, n))

        return _LogSeries(0.0, psi, fn.M // 2, fn.M, lambda law: ZERO)
    if isinstance(fn, Phi3):
        a = fn.alpha

        def psi(law, n):
            return f_exp_abs(np.sqrt(mode_variance(law, n)) / eigenvalue(n) ** a)

        def asym(law):
            q = variance_asymptote(law)
            if q.vanishing:
                return ZERO
            return Asymptote(F_PRIME_0 * math.sqrt(q.coef) * math.pi ** (-2 * a), q.power / 2 + 2 * a)

        return _LogSeries(-math.log(fn.normalization), psi, fn.M, None, asym)
    if isinstance(fn, GaussExp):
        def psi(law, n):
            return 0.5 * np.log1p(2.0 * np.asarray(mode_variance(law, n)))

        return _LogSeries(0.0, psi, 1, None, variance_asymptote)
    raise TypeError(f"no closed form for {fn!r}")


def _stop_for(series: _LogSeries, *laws: Law) -> int | None:
    if series.stop is not None:
        return series.stop
    tops = [support(law) for law in laws]
    if any(t is None for t in tops):
        return None
    return max(tops)


def log_expectation(fn: TestFunction, law: Law, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    s = _log_series(fn)
    total = sum_series(
        lambda n: s.psi(law, n), s.start, s.asymptote(law), policy, stop=_stop_for(s, law)
    ).value
    return s.log_prefactor - total


def expectation(fn: TestFunction, law: Law, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """Closed-form ``E[fn(X)]`` for ``X`` distributed according to ``law``."""
    return math.exp(log_expectation(fn, law, policy))


def expectation_gap(
    fn: TestFunction, ref: Law, approx: Law, policy: SeriesPolicy = DEFAULT_POLICY
) -> float:
    """Signed weak error ``E[fn(X_ref)] - E[fn(X_approx)]``.

    The log-factors of both laws are differenced mode by mode before summing,
    then ``E_approx * expm1(-D)`` avoids cancelling two nearly equal numbers.
    """
    s = _log_series(fn)

    def diff(n):
        return s.psi(ref, n) - s.psi(approx, n)

    asym = s.asymptote(ref).minus(s.asymptote(approx))
    kink = max((t for t in (support(ref), support(approx)) if t is not None), default=0)
    d = sum_series(diff, s.start, asym, policy, stop=_stop_for(s, ref, approx), smooth_from=kink).value
    return expectation(fn, approx, policy) * math.expm1(-d)


def expect_phi1(law: Law, eps: float, M: int, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    return expectation(Phi1(eps, M), law, policy)


def expect_phi2(law: Law, M: int, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    return expectation(Phi2(M), law, policy)


def expect_phi3(law: Law, alpha: float, M: int = 1, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    return expectation(Phi3(alpha, M), law, policy)


def expect_gauss_exp(law: Law, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    return expectation(GaussExp(), law, policy)


# -- limit constants --------------------------------------------------------------


LIMIT_KINDS = ("C_alpha", "Cbar_alpha", "Phi2ExactLimit", "Phi2EulerLimit")


class LimitConstant(NamedTuple):
    kind: str
    value: float
    quad_error: float
    alpha: float | None = None


def c_alpha_closed(alpha: float) -> float:
    """Elementary antiderivative of the ``C_alpha`` integral."""
    return 1.0 / (2 * alpha * math.sqrt(2.0) * math.pi ** (2 * alpha + 1))


def _quad(fun, a, b, tol):
    val, err = integrate.quad(fun, a, b, epsabs=tol, epsrel=1e-13, limit=500)
    if err > tol * 10:
        raise RuntimeError(f"quadrature budget exhausted (error estimate {err:.3g})")
    return val, err


def limit_constant(kind: str, alpha: float | None = None, quad: SeriesPolicy = DEFAULT_POLICY) -> LimitConstant:
    """Riemann-sum limit constants by adaptive quadrature.

    ``C_alpha`` and ``Cbar_alpha`` give the ``M^(-2 alpha)`` coefficients of the
    tail sums for the exact and Euler laws (before the ``f'(0)`` factor);
    the two ``Phi2`` kinds are the limits of the oscillating family's
    expectations for the exact law and for Euler with ``dt = T/M^2``.
    """
    tol = quad.abs_tol / 10
    if kind in ("C_alpha", "Cbar_alpha"):
        if alpha is None or not 0.25 < alpha <= 0.5:
            raise ValueError("alpha must lie in (1/4, 1/2]")
        p = 2 * alpha + 1
        scale = math.pi**p
        if kind == "C_alpha":
            def g(z):
                return 1.0 / (math.sqrt(2.0) * scale * z**p)
        else:
            def g(z):
                return 1.0 / (math.sqrt(2.0 + PI2 * z * z) * scale * z**p)
        # z = 1/t maps [1, inf) onto (0, 1]; the integrand becomes t^(p-2) * ...
        def mapped(t):
            return g(1.0 / t) / (t * t) if t > 0 else 0.0

        v, e = _quad(mapped, 0.0, 1.0, tol)
        return LimitConstant(kind, v, e, alpha)
    if kind == "Phi2ExactLimit":
        v, e = _quad(lambda z: 1.0 / (2 * PI2 * z * z), 0.5, 1.0, tol)
    elif kind == "Phi2EulerLimit":
        v, e = _quad(lambda z: 1.0 / (PI2 * z * z * (2 + PI2 * z * z)), 0.5, 1.0, tol)
    else:
        raise ValueError(f"unknown limit constant kind {kind!r}")
    val = math.exp(-v)
    return LimitConstant(kind, val, val * e, None)
