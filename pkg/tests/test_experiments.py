import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spdeweak import experiments as ex
from spdeweak.gaussian_calculus import Phi1, Phi2, Phi3, GaussExp, expectation
from spdeweak.spectral_model import Euler, Exact, Galerkin, alpha_moment


# -- fits ---------------------------------------------------------------------------------


def test_fit_exact_power():
    pts = [(x, 3 * x**-2.0) for x in (1, 2, 4, 8, 16)]
    fit = ex.fit_rate(pts)
    assert fit.slope == pytest.approx(-2.0, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3), abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points == 5


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        ex.fit_rate([(1, 1.0)])
    with pytest.raises(ValueError):
        ex.fit_rate([(1, 1.0), (2, 0.0), (3, 1.0)])
    with pytest.raises(ValueError):
        ex.fit_rate([(1, 1.0), (2, -1.0), (3, 1.0)])


def test_fit_noisy_power_law():
    rng = np.random.default_rng(123)
    x = np.logspace(0, 3, 40)
    y = 2.0 * x**-0.7 * np.exp(rng.normal(0, 0.05, x.size))
    fit = ex.fit_rate(list(zip(x, y)))
    # standard error of the OLS slope
    lx = np.log(x)
    se = 0.05 / math.sqrt(np.sum((lx - lx.mean()) ** 2))
    assert abs(fit.slope + 0.7) <= 3 * se


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(1e-8, 1e3), min_size=3, max_size=12))
def test_fit_is_deterministic(ys):
    pts = list(zip(range(1, len(ys) + 1), ys))
    a, b = ex.fit_rate(pts), ex.fit_rate(pts)
    assert a == b
    assert 0.0 <= a.r_squared <= 1.0


def test_sweep_fit_noise_floor_and_refit():
    x = [1, 2, 4, 8, 16, 32]
    # polluted coarsest point, then a clean power law, then a value at the noise floor
    y = [1.0, 0.25, 0.125, 0.0625, 0.03125, 1e-14]
    fit, first = ex.fit_sweep(x, y)
    assert first is not None and first.r_squared < 0.98
    assert fit.n_points == 4
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    clean, none = ex.fit_sweep([1, 2, 4], [1.0, 0.5, 0.25])
    assert none is None and clean.slope == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        ex.fit_sweep([1, 2, 4], [1.0, 1e-14, 1e-15])


def test_sweep_grid_monotone():
    with pytest.raises(ValueError):
        ex.Sweep("spectral", 1.0, "phi3", {}, [4, 8, 8])
    ex.Sweep("temporal", 1.0, "phi3", {}, [0.1, 0.01])


def test_unknown_scheme():
    with pytest.raises(ValueError):
        ex.approx_law("wavelet", 1.0, 4)


# -- bounded continuous witnesses -------------------------------------------------------------


def test_theorem0_spectral_floor_and_limit():
    grid = [2**j for j in range(4, 10)]
    curve = ex.theorem0_gap("spectral", 1.0, grid)
    limit = 1 - math.exp(-1 / (2 * math.pi**2))
    assert limit == pytest.approx(0.049399, abs=1e-6)
    assert min(curve.phi2) >= 0.9 * limit
    assert curve.phi2[-1] == pytest.approx(limit, rel=0.01)
    assert all(w >= 2 * n + 1 for n, w in zip(grid, curve.phi2_witness))


def test_theorem0_fixed_member_converges():
    errs = [abs(ex.weak_error(Phi2(32), "spectral", 1.0, N)) for N in (4, 8, 16, 32, 64)]
    assert errs[-1] < 1e-6
    # decay starts once lambda_32 dt < 1, then drops 4x per step
    errs = [abs(ex.weak_error(Phi2(32), "temporal", 1.0, 4.0**-j)) for j in range(1, 12)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-4


def test_theorem0_temporal_limit():
    curve = ex.theorem0_gap("temporal", 1.0, [8, 64, 512])
    limit = ex.phi2_limits()["temporal_gap"]
    assert limit > 0
    assert abs(curve.phi2[-1] - limit) / limit < 0.05
    assert min(curve.phi2) > 0.9 * limit


def test_theorem0_phi1_channel():
    curve = ex.theorem0_gap("spectral", 1.0, [8, 16], phi2_M=[64], phi1_eps=[0.1, 1.0], phi1_M=[16, 1024])
    assert all(g > 0 for g in curve.phi1)
    assert curve.gap == [max(a, b) for a, b in zip(curve.phi1, curve.phi2)]
    with pytest.raises(ValueError):
        ex.theorem0_gap("spectral", 1.0, [])


def test_phi1_scan_monotone_growth():
    # fixed N, growing M: the Galerkin value freezes while the exact value keeps falling
    rows = ex.phi1_scan(Galerkin(1.0, 16), 1.0, 0.5, [16, 64, 256, 1024, 2**14, 2**18])
    gaps = [g for _, _, _, g in rows]
    assert all(b > a for a, b in zip(gaps, gaps[1:]))
    assert len({ea for _, _, ea, _ in rows}) == 1


# -- Lipschitz family ---------------------------------------------------------------------------


def test_theorem1_spectral_example():
    fit, sw = ex.theorem1_rate("spectral", 1.0, 0.375, [2**j for j in range(4, 11)])
    assert fit.slope == pytest.approx(-0.375, abs=0.05)
    assert fit.r_squared >= 0.99
    assert all(e < 0 for e in sw.errors)


def test_theorem1_temporal_example():
    fit, _ = ex.theorem1_rate("temporal", 1.0, 0.4, [8, 16, 32, 64, 128, 256])
    assert fit.slope == pytest.approx(-0.8, abs=0.08)


def test_theorem1_slopes_monotone_in_alpha():
    for scheme, grid in (("spectral", [16, 64, 256, 1024]), ("temporal", [8, 32, 128])):
        slopes = [ex.theorem1_rate(scheme, 1.0, a, grid)[0].slope for a in (0.3, 0.375, 0.45)]
        assert slopes[0] > slopes[1] > slopes[2]


def test_theorem1_alpha_range():
    for a in (0.25, 0.5):
        with pytest.raises(ValueError):
            ex.theorem1_rate("spectral", 1.0, a, [16, 32, 64])


@pytest.mark.parametrize("alpha", [0.3, 0.375, 0.45])
def test_theorem1_prefactors(alpha):
    p = ex.theorem1_prefactor(1.0, alpha, 1024)
    assert p["by_N"] == pytest.approx(1.0, abs=0.05)
    # lambda_N^alpha = pi^(2 alpha) N^(2 alpha), which shifts the other ratio by that factor
    assert p["by_lambda"] == pytest.approx(math.pi ** (2 * alpha) * p["by_N"], rel=1e-12)
    q = ex.theorem1_temporal_prefactor(1.0, alpha, 256)
    assert q["ratio"] == pytest.approx(1.0, abs=0.05)


# -- smooth functional -----------------------------------------------------------------------------


def test_prop2_rates_and_contrast():
    fit, _ = ex.prop2_rate("spectral", 1.0, [2**j for j in range(4, 11)])
    assert fit.slope == pytest.approx(-1.0, abs=0.05)
    Ms = [8, 16, 32, 64, 128, 256]
    fit_t, _ = ex.prop2_rate("temporal", 1.0, [1 / m**2 for m in Ms])
    assert fit_t.slope == pytest.approx(0.5, abs=0.05)
    for a in (0.3, 0.375, 0.45):
        f3, _ = ex.theorem1_rate("temporal", 1.0, a, Ms)
        assert -f3.slope / 2 < fit_t.slope


# -- moment scans -------------------------------------------------------------------------------------


def test_moment_scan_below_quarter_bounded():
    bound = ex.moment_bound(0.2)
    for scheme in ("temporal", "spectral"):
        vals = [v for _, v in ex.moment_divergence_scan(0.2, [16, 64, 256, 1024], scheme)]
        assert all(v <= bound for v in vals)
    assert bound == pytest.approx(alpha_moment(Exact(1e3), 0.2).value, rel=1e-9)
    with pytest.raises(ValueError):
        ex.moment_bound(0.25)


def test_moment_scan_quarter_grows():
    vals = [v for _, v in ex.moment_divergence_scan(0.25, [2**j for j in range(4, 13)])]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] / vals[0] > 2


def test_moment_scan_fixed_k():
    rows = ex.moment_divergence_scan(0.25, [4, 8], k=3)
    law = Euler(1 / 16, 3)
    assert rows[0][1] == alpha_moment(law, 0.25).value


def test_weak_error_sign_and_size():
    e = ex.weak_error(GaussExp(), "spectral", 1.0, 8)
    assert e == pytest.approx(expectation(GaussExp(), Exact(1.0)) - expectation(GaussExp(), Galerkin(1.0, 8)), abs=1e-13)
    assert e < 0
    e = ex.weak_error(Phi1(0.1, 50), "temporal", 1.0, 0.01)
    assert e == pytest.approx(expectation(Phi1(0.1, 50), Exact(1.0)) - expectation(Phi1(0.1, 50), Euler(0.01, 100)), abs=1e-13)
    assert abs(ex.weak_error(Phi3(0.4, 3), "spectral", 1.0, 2)) > 0
