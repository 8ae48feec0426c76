"""Sweeps over discretization parameters and log-log rate fits.

Three regimes are exercised: bounded continuous witnesses (no convergence
of the supremum), the bounded Lipschitz family (weak order equal to the
strong order) and a smooth functional (weak order twice the strong order).
All values are closed forms; Monte Carlo cross-checks live in
:mod:`spdeweak.monte_carlo`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .gaussian_calculus import (
    F_PRIME_0,
    GaussExp,
    Phi1,
    Phi2,
    Phi3,
    TestFunction,
    c_alpha_closed,
    expectation,
    expectation_gap,
    limit_constant,
    lipschitz_normalization,
)
from .series import DEFAULT_POLICY, SeriesPolicy
from .spectral_model import Euler, Exact, Galerkin, alpha_moment, eigenvalue

NOISE_FLOOR = 1e-13
REFIT_R2 = 0.98
SCHEMES = ("spectral", "temporal")


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    residuals: tuple[float, ...] = ()

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r_squared}


def fit_rate(points: Sequence[tuple[float, float]]) -> RateFit:
    """Least squares line through ``(log parameter, log |error|)``."""
    pts = [(float(p), float(e)) for p, e in points]
    if len(pts) < 3:
        raise ValueError("a rate fit needs at least 3 points")
    x = np.log([p for p, _ in pts])
    errs = np.array([e for _, e in pts])
    if np.any(errs <= 0) or not np.all(np.isfinite(errs)):
        raise ValueError("errors must be positive and finite")
    y = np.log(errs)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), min(max(r2, 0.0), 1.0), len(pts), tuple(resid.tolist()))


def fit_sweep(abscissae, errors, coarse_first: bool = True) -> tuple[RateFit, RateFit | None]:
    """Fit a sweep after removing points at the noise floor.

    If R^2 < 0.98 the coarsest point (first of the grid when ``coarse_first``)
    is dropped and the fit redone once.  Returns ``(fit, first_fit)`` where
    ``first_fit`` is None unless a refit happened.
    """
    pts = [(a, abs(e)) for a, e in zip(abscissae, errors) if abs(e) > NOISE_FLOOR]
    if len(pts) < 3:
        raise ValueError("degenerate fit: fewer than 3 errors above the noise floor")
    first = fit_rate(pts)
    if first.r_squared >= REFIT_R2 or len(pts) < 4:
        return first, None
    trimmed = pts[1:] if coarse_first else pts[:-1]
    return fit_rate(trimmed), first


@dataclass
class Sweep:
    """Weak errors of one test function along a grid of discretization parameters."""

    scheme: str
    T: float
    family: str
    params: dict
    grid: list
    abscissae: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if g.size and not (np.all(np.diff(g) > 0) or np.all(np.diff(g) < 0)):
            raise ValueError("grid must be strictly monotone")

    def rows(self):
        return list(zip(self.grid, self.abscissae, self.errors))


def approx_law(scheme: str, T: float, h):
    """Galerkin law for ``h = N`` or Euler law at time T for ``h = dt``."""
    if scheme == "spectral":
        return Galerkin(T, int(h))
    if scheme == "temporal":
        return Euler.at_time(T, float(h))
    raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")


def weak_error(fn: TestFunction, scheme: str, T: float, h, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """Signed ``E[fn(X(T))] - E[fn(X_h)]``."""
    return expectation_gap(fn, Exact(T), approx_law(scheme, T, h), policy)


# -- bounded continuous witnesses ----------------------------------------------------


@dataclass
class GapCurve:
    scheme: str
    T: float
    grid: list
    phi1: list
    phi2: list
    phi1_witness: list
    phi2_witness: list

    @property
    def gap(self) -> list:
        return [max(a, b) for a, b in zip(self.phi1, self.phi2)]


def theorem0_gap(
    scheme: str,
    T: float = 1.0,
    grid: Sequence[int] = (16, 32, 64, 128, 256, 512),
    phi2_M: Sequence[int] | None = None,
    phi1_eps: Sequence[float] = (1e-3, 1e-2, 1e-1),
    phi1_M: Sequence[int] = (),
    policy: SeriesPolicy = DEFAULT_POLICY,
) -> GapCurve:
    """Lower bounds on the sup of the weak error over ``||phi||_0 <= 1``.

    Spectral: ``grid`` holds N and the oscillating witnesses range over
    ``phi2_M`` (default: even M up to 2^12).  Temporal: ``grid`` holds M with
    ``dt = T / M^2`` and the oscillating channel uses the paired witness of
    index M (extra members from ``phi2_M`` are added when given).  The
    ``phi1`` channel maximizes over ``phi1_eps x phi1_M``.
    """
    if not grid:
        raise ValueError("grid must be nonempty")
    if scheme == "spectral":
        members2 = list(phi2_M) if phi2_M is not None else [2**j for j in range(1, 13)]
    elif scheme == "temporal":
        members2 = list(phi2_M or [])
    else:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    exact = Exact(T)
    e2_exact: dict[int, float] = {}
    curve = GapCurve(scheme, T, list(grid), [], [], [], [])
    for h in grid:
        if scheme == "spectral":
            law = Galerkin(T, int(h))
            ms = members2
        else:
            law = Euler.at_time(T, T / h**2)
            ms = sorted(set(members2) | {int(h) + int(h) % 2})
        best2, arg2 = 0.0, None
        for M in ms:
            fn = Phi2(M)
            if M not in e2_exact:
                e2_exact[M] = expectation(fn, exact, policy)
            g = abs(e2_exact[M] - expectation(fn, law, policy))
            if g > best2:
                best2, arg2 = g, M
        best1, arg1 = 0.0, None
        for eps in phi1_eps:
            for M in phi1_M:
                g = abs(expectation_gap(Phi1(eps, M), exact, law, policy))
                if g > best1:
                    best1, arg1 = g, (eps, M)
        curve.phi2.append(best2)
        curve.phi2_witness.append(arg2)
        curve.phi1.append(best1)
        curve.phi1_witness.append(arg1)
    return curve


def phi1_scan(law, T: float, eps: float, Ms: Sequence[int], policy: SeriesPolicy = DEFAULT_POLICY):
    """``(M, E_exact, E_law, gap)`` rows for the ``Phi1`` family at fixed ``eps``."""
    exact = Exact(T)
    out = []
    for M in Ms:
        fn = Phi1(eps, M)
        ee, ea = expectation(fn, exact, policy), expectation(fn, law, policy)
        out.append((M, ee, ea, ea - ee))
    return out


def phi2_limits() -> dict:
    """Limits of the oscillating witnesses and the resulting gaps."""
    ex = limit_constant("Phi2ExactLimit").value
    eu = limit_constant("Phi2EulerLimit").value
    return {"exact": ex, "euler": eu, "spectral_gap": 1.0 - ex, "temporal_gap": abs(eu - ex)}


# -- Lipschitz family ---------------------------------------------------------------


def theorem1_sweep(scheme: str, T: float, alpha: float, grid, policy: SeriesPolicy = DEFAULT_POLICY) -> Sweep:
    """Weak errors of the Lipschitz family.

    Spectral: ``grid`` holds N, the witness sums over all modes and errors are
    reported against ``lambda_N``.  Temporal: ``grid`` holds M, ``dt = T/M^2``,
    the witness sums over modes ``m >= M`` and errors are reported against M.
    """
    sw = Sweep(scheme, T, "phi3", {"alpha": alpha}, list(grid))
    for h in grid:
        if scheme == "spectral":
            err = weak_error(Phi3(alpha, 1), "spectral", T, int(h), policy)
            sw.abscissae.append(float(eigenvalue(h)))
        elif scheme == "temporal":
            err = weak_error(Phi3(alpha, int(h)), "temporal", T, T / h**2, policy)
            sw.abscissae.append(float(h))
        else:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        sw.errors.append(err)
    return sw


def theorem1_rate(scheme: str, T: float, alpha: float, grid, policy: SeriesPolicy = DEFAULT_POLICY):
    """Slope of ``log|error|`` against ``log lambda_N`` (spectral) or ``log M`` (temporal).

    Expected slopes are ``-alpha`` and ``-2 alpha``.  Returns ``(fit, sweep)``.
    """
    if not 0.25 < alpha < 0.5:
        raise ValueError("alpha must lie in (1/4, 1/2)")
    sw = theorem1_sweep(scheme, T, alpha, grid, policy)
    fit, _ = fit_sweep(sw.abscissae, sw.errors)
    return fit, sw


def theorem1_prefactor(T: float, alpha: float, N: int, policy: SeriesPolicy = DEFAULT_POLICY) -> dict:
    """Compare the spectral error at N with ``f'(0) E[phi] C_alpha`` under two normalizations.

    ``by_lambda`` multiplies the error by ``lambda_N^alpha``; ``by_N`` by
    ``N^(2 alpha)``.  The tail sum behind the error is ``~ C_alpha N^(-2 alpha)``,
    so only ``by_N`` tends to 1; ``by_lambda`` tends to ``pi^(2 alpha)``.
    """
    err = abs(weak_error(Phi3(alpha, 1), "spectral", T, N, policy))
    target = F_PRIME_0 * expectation(Phi3(alpha, 1), Exact(T), policy) * c_alpha_closed(alpha)
    return {
        "error": err,
        "target": target,
        "by_lambda": err * float(eigenvalue(N)) ** alpha / target,
        "by_N": err * N ** (2 * alpha) / target,
    }


def theorem1_temporal_prefactor(T: float, alpha: float, M: int, policy: SeriesPolicy = DEFAULT_POLICY) -> dict:
    """Ratio of ``L_alpha M^(2 alpha) |error|`` to ``f'(0) (C_alpha - Cbar_alpha)``."""
    err = abs(weak_error(Phi3(alpha, M), "temporal", T, T / M**2, policy))
    cbar = limit_constant("Cbar_alpha", alpha).value
    target = F_PRIME_0 * (c_alpha_closed(alpha) - cbar)
    return {"error": err, "target": target, "ratio": err * M ** (2 * alpha) * lipschitz_normalization(alpha) / target}


# -- smooth functional ----------------------------------------------------------------


def prop2_sweep(scheme: str, T: float, grid, policy: SeriesPolicy = DEFAULT_POLICY) -> Sweep:
    sw = Sweep(scheme, T, "gauss_exp", {}, list(grid))
    for h in grid:
        sw.abscissae.append(float(h))
        sw.errors.append(weak_error(GaussExp(), scheme, T, h, policy))
    return sw


def prop2_rate(scheme: str, T: float, grid, policy: SeriesPolicy = DEFAULT_POLICY):
    """Slope of the smooth functional's error in N (expect -1) or in dt (expect +1/2)."""
    sw = prop2_sweep(scheme, T, grid, policy)
    fit, _ = fit_sweep(sw.abscissae, sw.errors, coarse_first=scheme == "spectral")
    return fit, sw


# -- alpha-moment growth ----------------------------------------------------------------


def moment_bound(alpha: float) -> float:
    """``sum_n 1 / (2 lambda_n^(1 - 2 alpha))``, finite for alpha < 1/4."""
    if not alpha < 0.25:
        raise ValueError("the bound is finite only for alpha < 1/4")
    return math.pi ** (4 * alpha - 2) * float(special.zeta(2 - 4 * alpha)) / 2


def moment_divergence_scan(
    alpha: float,
    grid: Sequence[int],
    scheme: str = "temporal",
    T: float = 1.0,
    k: int | None = None,
    policy: SeriesPolicy = DEFAULT_POLICY,
) -> list[tuple[int, float]]:
    """``E|X_h|_alpha^2`` along ``dt = 1/N^2`` (temporal) or along N (spectral).

    Temporal laws take ``k = floor(T/dt)`` steps unless a fixed ``k`` is given.
    """
    out = []
    for N in grid:
        if scheme == "temporal":
            dt = 1.0 / N**2
            law = Euler(dt, k) if k is not None else Euler.at_time(T, dt)
        elif scheme == "spectral":
            law = Galerkin(T, int(N))
        else:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        out.append((int(N), alpha_moment(law, alpha, policy).value))
    return out
