import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from spdeweak.experiments import fit_rate
from spdeweak.series import SeriesPolicy
from spdeweak.spectral_model import (
    PI2,
    EigenSystem,
    Euler,
    Exact,
    Galerkin,
    Projected,
    alpha_moment,
    alpha_moment_threshold,
    alpha_quarter_limit,
    alpha_quarter_riemann_sum,
    cross_covariance,
    eigenvalue,
    euler_steps,
    mode_variance,
    strong_error_spectral,
    strong_error_temporal,
    sup_moment_threshold,
)


def brute_euler_variance(n, dt, k):
    lam = PI2 * n * n
    return dt * sum((1.0 + lam * dt) ** (-2 * l) for l in range(1, k + 1))


def brute_cross_covariance(n, T, dt, k):
    lam = PI2 * n * n
    return sum(
        (1 + lam * dt) ** (-(k - l)) * (math.exp(-lam * (T - (l + 1) * dt)) - math.exp(-lam * (T - l * dt))) / lam
        for l in range(k)
    )


# -- eigen system ---------------------------------------------------------------------


def test_eigenvalues():
    es = EigenSystem(10)
    lam = es.lambdas()
    assert lam[0] == pytest.approx(math.pi**2)
    assert np.all(np.diff(lam) > 0)
    assert es.lam(3) == pytest.approx(9 * math.pi**2)
    with pytest.raises(IndexError):
        es.lam(11)
    with pytest.raises(ValueError):
        EigenSystem(0)


# -- laws -----------------------------------------------------------------------------


def test_law_validation():
    with pytest.raises(ValueError):
        Exact(0.0)
    with pytest.raises(ValueError):
        Galerkin(1.0, 0)
    for dt in (0.0, 1.0, 1.5, -0.1):
        with pytest.raises(ValueError):
            Euler(dt, 3)
    with pytest.raises(ValueError):
        Euler(0.1, -1)
    with pytest.raises(ValueError):
        mode_variance(Exact(1.0), 0)


def test_galerkin_kills_high_modes():
    assert mode_variance(Galerkin(1.0, 4), 5) == 0.0
    assert mode_variance(Galerkin(1.0, 4), 4) == mode_variance(Exact(1.0), 4)


def test_euler_one_step():
    dt = 0.03
    for n in (1, 2, 17):
        lam = PI2 * n * n
        assert mode_variance(Euler(dt, 1), n) == pytest.approx(dt / (1 + lam * dt) ** 2, rel=1e-14)


def test_euler_zero_steps():
    assert np.all(mode_variance(Euler(0.1, 0), np.arange(1, 50)) == 0.0)


def test_exact_long_time():
    # e^{-20 pi^2} is far below double precision
    assert mode_variance(Exact(10.0), 1) == pytest.approx(1 / (2 * math.pi**2), rel=1e-15)
    assert 1 / (2 * math.pi**2) == pytest.approx(0.050661, abs=5e-7)


@settings(max_examples=200, deadline=None)
@given(
    n=st.integers(1, 5000),
    log_dt=st.floats(-7, -0.01),
    k=st.integers(0, 64),
)
def test_euler_closed_form_matches_brute_force(n, log_dt, k):
    dt = 10.0**log_dt
    brute = brute_euler_variance(n, dt, k)
    closed = mode_variance(Euler(dt, k), n)
    assert closed == pytest.approx(brute, rel=1e-12, abs=0.0 if brute else 1e-300)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 10**6), T=st.floats(1e-4, 100.0), N=st.integers(1, 1000))
def test_variance_bounds_and_projection(n, T, N):
    q = mode_variance(Exact(T), n)
    assert 0.0 <= q <= 1.0 / (2 * PI2 * n * n) * (1 + 1e-15)
    g = mode_variance(Galerkin(T, N), n)
    assert g == (q if n <= N else 0.0)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 1000), T=st.floats(1e-3, 10.0))
def test_exact_variance_increasing_in_time(n, T):
    assert mode_variance(Exact(T), n) <= mode_variance(Exact(2 * T), n)


def test_euler_steps_rounding():
    assert euler_steps(1.0, 0.1) == 10
    assert euler_steps(1.0, 1 / 3) == 3
    assert euler_steps(1.0, 0.3) == 3
    assert euler_steps(1.0, 1 / 4096**2) == 4096**2


def test_projected_law():
    law = Projected(Exact(1.0), 3)
    assert mode_variance(law, 3) == mode_variance(Exact(1.0), 3)
    assert mode_variance(law, 4) == 0.0


# -- alpha moments ----------------------------------------------------------------------


def test_zero_moment_long_time_is_one_twelfth():
    m = alpha_moment(Exact(50.0), 0.0)
    assert not m.diverges
    assert m.value == pytest.approx(1 / 12, abs=1e-10)


def test_galerkin_moment_finite_all_alpha():
    for N in (1, 10, 1000):
        for a in (0.0, 0.5, 1.0):
            m = alpha_moment(Galerkin(1.0, N), a)
            assert not m.diverges and m.status == "finite"
    n = np.arange(1, 11)
    direct = float(np.sum(eigenvalue(n) ** 2 * mode_variance(Exact(1.0), n)))
    assert alpha_moment(Galerkin(1.0, 10), 1.0).value == pytest.approx(direct, rel=1e-14)


@pytest.mark.parametrize(
    "law, alpha, diverges",
    [
        (Exact(1.0), 0.2, False),
        (Exact(1.0), 0.249, False),
        (Exact(1.0), 0.25, True),
        (Exact(1.0), 0.4, True),
        (Euler(0.01, 100), 0.25, False),
        (Euler(0.01, 100), 0.7, False),
        (Euler(0.01, 100), 0.75, True),
        (Euler(0.01, 100), 1.0, True),
    ],
)
def test_divergence_flags(law, alpha, diverges):
    m = alpha_moment(law, alpha)
    assert m.diverges == diverges
    assert m.status == ("proved-divergent" if diverges else "finite")


def test_thresholds():
    assert alpha_moment_threshold(Exact(1.0)) == 0.25
    assert alpha_moment_threshold(Euler(0.1, 10)) == 0.75
    assert math.isinf(alpha_moment_threshold(Galerkin(1.0, 5)))
    for s in ("exact", "spectral", "temporal"):
        assert sup_moment_threshold(s) == 0.25


def test_moment_below_quarter_against_brute_force():
    law = Exact(1.0)
    n = np.arange(1, 4_000_001, dtype=float)
    head = float(np.sum(eigenvalue(n) ** 0.2 * mode_variance(law, n)))
    # tail of pi^0.4 n^0.4 / (2 pi^2 n^2)
    tail = math.pi**0.4 / (2 * PI2) * special.zeta(1.6, 4_000_001)
    assert alpha_moment(law, 0.1).value == pytest.approx(head + tail, abs=1e-9)


def test_quarter_moment_stable_under_doubling():
    law = Euler(1e-3, 1000)
    a = alpha_moment(law, 0.25, SeriesPolicy(abs_tol=1e-10)).value
    b = alpha_moment(law, 0.25, SeriesPolicy(abs_tol=1e-10, min_terms=128)).value
    assert a == pytest.approx(b, abs=1e-10)


def test_alpha_range():
    with pytest.raises(ValueError):
        alpha_moment(Exact(1.0), 1.5)


# -- quarter limit ---------------------------------------------------------------------


def test_quarter_limit_positive_and_monotone():
    vals = [alpha_quarter_limit(1, m) for m in (1, 2, 4, 8, 16, 64, 256)]
    assert vals[0] > 0
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_quarter_limit_against_trapezoid():
    k, cut = 3, 4
    a = math.pi / cut
    u = np.linspace(math.log(a), math.log(1e4), 400001)
    z = np.exp(u)
    g = (1 - (1 + z * z) ** (-2 * k)) / (z * (2 + z * z)) * z
    integral = integrate.trapezoid(g, u) / math.pi
    assert alpha_quarter_limit(k, cut) == pytest.approx(integral, rel=1e-7)


def test_riemann_sum_matches_integral():
    N = 2**14
    for cut in (1, 16, 256):
        assert alpha_quarter_riemann_sum(N * N, cut, N) == pytest.approx(alpha_quarter_limit(N * N, cut), rel=0.01)


# -- strong errors -----------------------------------------------------------------------


def test_strong_spectral_bounds_and_monotone():
    vals = [strong_error_spectral(1.0, N) for N in (4, 8, 16, 32)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    for N, v in zip((4, 8, 16, 32), vals):
        assert 0 < v <= 1 / (2 * PI2 * N)


def test_strong_spectral_oracle():
    # tail sum computed independently in extended precision
    assert strong_error_spectral(1.0, 16) == pytest.approx(0.00306940029919294467570315042252, rel=1e-11)


def test_strong_spectral_slope():
    Ns = [2**j for j in range(4, 11)]
    fit = fit_rate([(N, strong_error_spectral(1.0, N)) for N in Ns])
    assert fit.slope == pytest.approx(-1.0, abs=0.05)


@pytest.mark.parametrize("n", [1, 2, 5, 40])
@pytest.mark.parametrize("T, dt", [(1.0, 0.25), (1.0, 1 / 16), (0.7, 0.3), (0.5, 0.5)])
def test_cross_covariance_matches_step_sum(n, T, dt):
    k = euler_steps(T, dt)
    assert cross_covariance(T, dt, n) == pytest.approx(brute_cross_covariance(n, T, dt, k), rel=1e-11, abs=1e-300)


def test_strong_temporal_single_step():
    # k = 1: E|X(T) - X_1|^2 per mode = q + dt/(1+x)^2 - 2 (1 - e^{-x}) / (lam (1+x))
    T = dt = 0.5
    n = np.arange(1, 3001, dtype=float)
    lam = PI2 * n * n
    x = lam * dt
    terms = -np.expm1(-2 * lam * T) / (2 * lam) + dt / (1 + x) ** 2 - 2 * (-np.expm1(-x)) / (lam * (1 + x))
    assert strong_error_temporal(T, dt, dim=3000) == pytest.approx(float(np.sum(terms)), rel=1e-12)


def test_strong_temporal_oracle():
    # mode sum to 2000 in 30-digit arithmetic of q + q_dt - 2 c
    assert strong_error_temporal(1.0, 1 / 16, dim=2000) == pytest.approx(0.024238046859808124837724660151, rel=1e-11)


def test_strong_temporal_validation():
    for dt in (0.0, 1.0, 1.2):
        with pytest.raises(ValueError):
            strong_error_temporal(2.0, dt)
    with pytest.raises(ValueError):
        strong_error_temporal(0.1, 0.2)


def test_strong_temporal_slope():
    dts = [4.0**-j for j in range(1, 7)]
    vals = [strong_error_temporal(1.0, d) for d in dts]
    assert all(v > 0 for v in vals)
    assert fit_rate(list(zip(dts, vals))).slope == pytest.approx(0.5, abs=0.05)
