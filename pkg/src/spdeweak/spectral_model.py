"""Diagonal Gaussian laws of the linear stochastic heat equation and its discretizations.

The equation ``dX = AX dt + dW`` on ``L^2(0, 1)`` with Dirichlet conditions,
``X(0) = 0`` and space-time white noise is diagonal in the sine basis, with
eigenvalues ``lambda_n = pi^2 n^2``.  Every law considered here is a centered
Gaussian with independent mode coordinates, so it is described completely
by its per-mode variances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
from scipy import integrate

from .series import DEFAULT_POLICY, ZERO, Asymptote, SeriesPolicy, partial_sum, sum_series

PI2 = math.pi**2


def eigenvalue(n):
    """``lambda_n = pi^2 n^2`` (works on scalars and arrays)."""
    n = np.asarray(n, dtype=np.float64)
    return PI2 * n * n


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues of the Dirichlet Laplacian on (0, 1), up to ``n_max``."""

    n_max: int

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be a positive integer")

    def indices(self) -> np.ndarray:
        return np.arange(1, self.n_max + 1, dtype=np.float64)

    def lambdas(self) -> np.ndarray:
        return eigenvalue(self.indices())

    def lam(self, n: int) -> float:
        if not 1 <= n <= self.n_max:
            raise IndexError(n)
        return PI2 * n * n


def euler_steps(T: float, dt: float) -> int:
    """``floor(T / dt)``, robust to the rounding of ``T / (T / k)``."""
    q = T / dt
    r = round(q)
    if abs(q - r) <= 1e-9 * max(1.0, q):
        return int(r)
    return int(math.floor(q))


@dataclass(frozen=True)
class Exact:
    """Law of the mild solution X(T)."""

    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")


@dataclass(frozen=True)
class Galerkin:
    """Law of the spectral Galerkin approximation in dimension N at time T."""

    T: float
    N: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")


@dataclass(frozen=True)
class Euler:
    """Law of the linear implicit Euler iterate after ``k`` steps of size ``dt``."""

    dt: float
    k: int

    def __post_init__(self):
        if not 0 < self.dt < 1:
            raise ValueError(f"dt must lie in (0, 1), got {self.dt}")
        if int(self.k) != self.k or self.k < 0:
            raise ValueError("k must be a nonnegative integer")

    @classmethod
    def at_time(cls, T: float, dt: float) -> "Euler":
        return cls(dt, euler_steps(T, dt))

    @property
    def T_eff(self) -> float:
        return self.k * self.dt


@dataclass(frozen=True)
class Projected:
    """Any law with the modes above ``N`` removed (what a sampler of dimension N sees)."""

    base: "Law"
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")


Law = Union[Exact, Galerkin, Euler, Projected]


def _exact_variance(n, T):
    lam = eigenvalue(n)
    return -np.expm1(-2.0 * lam * T) / (2.0 * lam)


def _euler_variance(n, dt, k):
    lam = eigenvalue(n)
    x = lam * dt
    return -np.expm1(-2.0 * k * np.log1p(x)) / (lam * (2.0 + x))


def mode_variance(law: Law, n):
    """Variance of the coordinate ``<X, e_n>`` under ``law``.

    ``n`` may be an integer or an array of (integer-valued) indices.  Euler
    variances use the summed geometric series
    ``dt * sum_{l=1}^{k} (1 + lambda dt)^(-2l)``.
    """
    n_arr = np.asarray(n, dtype=np.float64)
    if np.any(n_arr < 1):
        raise ValueError("mode index must be >= 1")
    with np.errstate(over="ignore", under="ignore"):
        if isinstance(law, Exact):
            out = _exact_variance(n_arr, law.T)
        elif isinstance(law, Galerkin):
            out = np.where(n_arr <= law.N, _exact_variance(n_arr, law.T), 0.0)
        elif isinstance(law, Euler):
            out = _euler_variance(n_arr, law.dt, law.k) if law.k else np.zeros_like(n_arr)
        elif isinstance(law, Projected):
            out = np.where(n_arr <= law.N, mode_variance(law.base, n_arr), 0.0)
        else:
            raise TypeError(f"not a law: {law!r}")
    return float(out) if np.ndim(out) == 0 else out


def variance_asymptote(law: Law) -> Asymptote:
    """Leading power law of ``mode_variance(law, n)`` in ``n``."""
    if isinstance(law, Exact):
        return Asymptote(1.0 / (2.0 * PI2), 2.0)
    if isinstance(law, Euler) and law.k > 0:
        return Asymptote(1.0 / (PI2 * PI2 * law.dt), 4.0)
    return ZERO


def support(law: Law) -> int | None:
    """Largest mode with nonzero variance, or None when all modes are active."""
    if isinstance(law, Galerkin):
        return law.N
    if isinstance(law, Projected):
        inner = support(law.base)
        return law.N if inner is None else min(inner, law.N)
    if isinstance(law, Euler) and law.k == 0:
        return 0
    return None


def variances(law: Law, dim: int) -> np.ndarray:
    return np.asarray(mode_variance(law, np.arange(1, dim + 1)), dtype=np.float64)


# -- alpha-norm moments ---------------------------------------------------------


class AlphaMoment(NamedTuple):
    value: float
    diverges: bool
    status: str  # "finite" | "proved-divergent" | "budget-exhausted"
    cut: int


def alpha_moment_threshold(law: Law) -> float:
    """Sup of the alpha values for which ``E|X|_alpha^2`` is finite (fixed law)."""
    if support(law) is not None:
        return math.inf
    if isinstance(law, Exact):
        return 0.25
    return 0.75


def sup_moment_threshold(scheme: str) -> float:
    """Threshold of ``sup`` over the discretization parameter of ``E|X_h|_alpha^2``.

    ``scheme`` is ``"exact"``, ``"spectral"`` or ``"temporal"``; all three
    coincide at 1/4.
    """
    if scheme not in ("exact", "spectral", "temporal"):
        raise ValueError(scheme)
    return 0.25


def alpha_moment(law: Law, alpha: float, policy: SeriesPolicy = DEFAULT_POLICY) -> AlphaMoment:
    """``E |X|_alpha^2 = sum_n lambda_n^(2 alpha) q_n`` under ``law``.

    Divergent cases return the partial sum up to ``policy.max_terms`` so that
    growth curves can be plotted.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")

    def term(n):
        return eigenvalue(n) ** (2 * alpha) * mode_variance(law, n)

    top = support(law)
    if top is not None:
        val = sum_series(term, 1, stop=top).value if top else 0.0
        return AlphaMoment(val, False, "finite", top)

    if alpha < alpha_moment_threshold(law):
        asym = variance_asymptote(law).scaled(math.pi ** (4 * alpha), -4 * alpha)
        res = sum_series(term, 1, asym, policy)
        if res.certified:
            return AlphaMoment(res.value, False, "finite", res.cut)
        return AlphaMoment(res.value, True, "budget-exhausted", res.cut)
    val = partial_sum(term, 1, policy.max_terms, policy)
    return AlphaMoment(val, True, "proved-divergent", policy.max_terms)


def _quarter_integrand(z, k):
    z = np.asarray(z, dtype=np.float64)
    return -np.expm1(-2.0 * k * np.log1p(z * z)) / (z * (2.0 + z * z))


def alpha_quarter_limit(k: int, M_cut: int, quad: SeriesPolicy = DEFAULT_POLICY) -> float:
    """``(1/pi) int_{pi/M_cut}^inf (1 - (1+z^2)^(-2k)) / (z (2 + z^2)) dz``.

    Riemann-sum limit of the ``alpha = 1/4`` Euler moment along ``dt = 1/N^2``
    restricted to the modes ``n >= N / M_cut``.
    """
    if k < 1 or M_cut < 1:
        raise ValueError("k and M_cut must be positive")
    a = math.pi / M_cut

    def f(z):
        return float(_quarter_integrand(z, k))

    tol = quad.abs_tol / 4
    pieces = [(a, max(a, 1.0)), (max(a, 1.0), math.inf)]
    total, err = 0.0, 0.0
    for lo, hi in pieces:
        if hi <= lo:
            continue
        v, e = integrate.quad(f, lo, hi, epsabs=tol, epsrel=1e-13, limit=500)
        total += v
        err += e
    if err > quad.abs_tol:
        raise RuntimeError(f"quadrature budget exhausted (error estimate {err:.3g})")
    return total / math.pi


def alpha_quarter_riemann_sum(k: int, M_cut: int, N: int, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """Discrete counterpart ``(1/N) sum_{n >= N/M_cut} g(pi n / N)`` of :func:`alpha_quarter_limit`."""
    start = max(1, math.ceil(N / M_cut))

    def term(n):
        return _quarter_integrand(math.pi * n / N, k) / N

    asym = Asymptote(N**2 / math.pi**3, 3.0)
    return sum_series(term, start, asym, policy).value


# -- strong errors --------------------------------------------------------------


def strong_error_spectral(
    T: float, N: int, policy: SeriesPolicy = DEFAULT_POLICY, dim: int | None = None
) -> float:
    """``E|X(T) - P_N X(T)|^2``: the variance of the discarded modes.

    With ``dim`` the modes above ``dim`` are ignored, matching a sampler of
    that dimension.
    """
    law = Exact(T)
    if N < 1:
        raise ValueError("N must be positive")
    return sum_series(lambda n: mode_variance(law, n), N + 1, variance_asymptote(law), policy, stop=dim).value


def cross_covariance(T: float, dt: float, n):
    """``E[<X(T), e_n> <X_k, e_n>]`` for the Euler iterate ``k = floor(T/dt)`` driven by the same noise."""
    k = euler_steps(T, dt)
    lam = eigenvalue(n)
    x = lam * dt
    tau = max(T - k * dt, 0.0)
    with np.errstate(over="ignore", under="ignore"):
        step = -np.expm1(-x) / lam
        geo = -np.expm1(-k * (x + np.log1p(x))) / (x - np.expm1(-x))
        out = np.exp(-lam * tau) * step * geo
    return float(out) if np.ndim(out) == 0 else out


def _check_temporal(T, dt):
    if not 0 < dt < 1:
        raise ValueError(f"dt must lie in (0, 1), got {dt}")
    if dt > T:
        raise ValueError("dt must not exceed T")


def strong_error_temporal(
    T: float, dt: float, policy: SeriesPolicy = DEFAULT_POLICY, dim: int | None = None
) -> float:
    """``E|X(T) - X_k|^2`` with ``k = floor(T/dt)`` under shared Brownian increments.

    Per mode this is ``q_n + q_n^dt - 2 c_n`` with ``c_n`` from
    :func:`cross_covariance`; ``dim`` truncates the mode sum.
    """
    _check_temporal(T, dt)
    exact = Exact(T)
    euler = Euler.at_time(T, dt)

    def term(n):
        return mode_variance(exact, n) + mode_variance(euler, n) - 2.0 * cross_covariance(T, dt, n)

    return sum_series(term, 1, variance_asymptote(exact), policy, stop=dim).value
