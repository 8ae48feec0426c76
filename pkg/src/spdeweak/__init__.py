"""Weak and strong errors of spectral Galerkin and linear implicit Euler
discretizations of the linear stochastic heat equation with space-time white
noise, in closed form and by Monte Carlo."""

from .gaussian_calculus import (
    F_PRIME_0,
    GaussExp,
    LimitConstant,
    Phi1,
    Phi2,
    Phi3,
    expect_gauss_exp,
    expect_phi1,
    expect_phi2,
    expect_phi3,
    expectation,
    expectation_gap,
    f_exp_abs,
    limit_constant,
)
from .monte_carlo import Estimate, MCConfig, mc_expectation, mc_strong_error, sample_coupled_temporal, sample_modes
from .series import DEFAULT_POLICY, SeriesPolicy
from .spectral_model import (
    EigenSystem,
    Euler,
    Exact,
    Galerkin,
    Projected,
    alpha_moment,
    alpha_quarter_limit,
    mode_variance,
    strong_error_spectral,
    strong_error_temporal,
)

__version__ = "0.1.0"
