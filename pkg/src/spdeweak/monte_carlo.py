"""Seeded Monte Carlo sampling of the mode laws, used as an independent oracle.

Samples are produced in fixed-size blocks.  Block ``b`` draws from a Philox
generator keyed by ``(seed, stream, b)``, so every normal is a function of
``(seed, sample index, mode index)`` alone.  Block statistics are merged along
a fixed pairwise tree, which makes estimates bit-identical for any number of
worker threads (``SPDE_THREADS``, 0 = one per CPU).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .spectral_model import Exact, Law, eigenvalue, euler_steps, variances

BLOCK = 4096

# stream identifiers keep independent experiments from sharing normals
_STREAM_MODES = 1
_STREAM_COUPLED = 2
_STREAM_SPECTRAL = 3
_STREAM_WEAK = 4
_STREAM_SCALAR = 5

# weights below e^-41.5 (~1e-18) of the leading one are not simulated
_WINDOW_LOG_EPS = 41.5


@dataclass(frozen=True)
class MCConfig:
    samples: int
    seed: int = 0
    dim: int = 4096
    antithetic: bool = False

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be positive")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.antithetic and self.samples < 2:
            raise ValueError("antithetic sampling needs at least 2 samples")


class Estimate(NamedTuple):
    """Sample mean with its standard error ``std / sqrt(samples)``.

    For complex integrands ``mean`` is the real part, ``mean_imag`` the
    imaginary part and the standard error uses ``E|v - mean|^2``.
    """

    mean: float
    std_error: float
    samples: int
    mean_imag: float = 0.0

    def z_score(self, target: float) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.mean == target else math.inf
        return abs(self.mean - target) / self.std_error


def worker_count() -> int:
    raw = os.environ.get("SPDE_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("SPDE_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence([seed & 0xFFFFFFFF, seed >> 32, stream, block])
    return np.random.Generator(np.random.Philox(ss))


def _block_sizes(total: int) -> list[int]:
    full, rest = divmod(total, BLOCK)
    return [BLOCK] * full + ([rest] if rest else [])


class _Stats(NamedTuple):
    n: int
    mean: complex
    m2: float


def _stats(values: np.ndarray) -> _Stats:
    v = np.asarray(values)
    mean = v.mean()
    dev = v - mean
    m2 = float(np.sum((dev * np.conj(dev)).real))
    return _Stats(v.size, complex(mean), m2)


def _merge(a: _Stats, b: _Stats) -> _Stats:
    n = a.n + b.n
    delta = b.mean - a.mean
    mean = a.mean + delta * (b.n / n)
    m2 = a.m2 + b.m2 + abs(delta) ** 2 * a.n * b.n / n
    return _Stats(n, mean, m2)


def _tree_reduce(parts: list[_Stats]) -> _Stats:
    while len(parts) > 1:
        nxt = [_merge(parts[i], parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def _run_blocks(fn: Callable[[int, int], np.ndarray], total: int) -> Estimate:
    """Evaluate ``fn(block_index, size)`` over all blocks and merge in fixed order."""
    sizes = _block_sizes(total)
    workers = min(worker_count(), len(sizes))

    def one(i):
        return _stats(fn(i, sizes[i]))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    else:
        parts = [one(i) for i in range(len(sizes))]
    s = _tree_reduce(parts)
    se = math.sqrt(s.m2 / (s.n - 1) / s.n) if s.n > 1 else 0.0
    return Estimate(s.mean.real, se, s.n, s.mean.imag)


# -- samplers ---------------------------------------------------------------------


def sample_modes(law: Law, dim: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Independent centered normals with the law's mode variances (first ``dim`` modes)."""
    if dim < 1:
        raise ValueError("dim must be positive")
    sd = np.sqrt(variances(law, dim))
    shape = (dim,) if size is None else (size, dim)
    return rng.standard_normal(shape) * sd


def _coupled_weights(T: float, dt: float, dim: int):
    k = euler_steps(T, dt)
    if k < 1:
        raise ValueError("need floor(T/dt) >= 1")
    lam = eigenvalue(np.arange(1, dim + 1))
    x = lam * dt
    log_r = -np.log1p(x)
    # conditional law of the exact step integral given the Brownian increment
    a = -np.expm1(-x) / x
    v = -np.expm1(-2.0 * x) / (2.0 * lam)
    resid = np.sqrt(np.maximum(v - a * a * dt, 0.0))
    tau = max(T - k * dt, 0.0)
    window = np.minimum(k, 1 + np.ceil(_WINDOW_LOG_EPS / -log_r)).astype(np.int64)
    return k, lam, x, log_r, a, resid, tau, window


def sample_coupled_temporal(T: float, dt: float, dim: int, rng: np.random.Generator, size: int = 1):
    """Draw ``(X(T), X_k)`` mode vectors driven by the same Brownian increments.

    The Euler leg follows ``X_{l+1} = (1 + lambda dt)^(-1) (X_l + dbeta_l)``.
    The exact leg adds, for each step, the OU stochastic integral over that
    step: given the increment it is normal with mean ``a dbeta`` and residual
    variance ``v - a^2 dt``, drawn from an auxiliary normal.  Steps are
    accumulated backwards from the last one; once a mode's weight falls below
    ``1e-18`` its older steps are skipped.  Returns two arrays of shape
    ``(size, dim)``.
    """
    k, lam, x, log_r, a, resid, tau, window = _coupled_weights(T, dt, dim)
    sq = math.sqrt(dt)
    exact = np.zeros((size, dim))
    euler = np.zeros((size, dim))
    tail = np.exp(-lam * tau)
    for j in range(1, int(window.max()) + 1):
        active = int(np.count_nonzero(window >= j))
        db = rng.standard_normal((size, active)) * sq
        xi = rng.standard_normal((size, active))
        euler[:, :active] += np.exp(j * log_r[:active]) * db
        w = tail[:active] * np.exp(-(j - 1) * x[:active])
        exact[:, :active] += w * (a[:active] * db + resid[:active] * xi)
    if tau > 0:
        rem_sd = np.sqrt(-np.expm1(-2.0 * lam * tau) / (2.0 * lam))
        exact += rng.standard_normal((size, dim)) * rem_sd
    return exact, euler


# -- estimators -------------------------------------------------------------------


def mc_expectation(law: Law, test_function: Callable[[np.ndarray], np.ndarray], config: MCConfig) -> Estimate:
    """Unbiased estimate of ``E[phi(X)]`` under the ``config.dim``-truncated law.

    With ``antithetic`` the pairs ``(x, -x)`` are averaged and the estimate
    counts pairs, so the function-evaluation budget stays ``config.samples``.
    """
    units = config.samples // 2 if config.antithetic else config.samples

    def block(i, size):
        rng = block_rng(config.seed, _STREAM_MODES, i)
        x = sample_modes(law, config.dim, rng, size)
        vals = np.broadcast_to(test_function(x), (size,))
        if config.antithetic:
            vals = 0.5 * (vals + np.broadcast_to(test_function(-x), (size,)))
        return vals

    return _run_blocks(block, units)


def mc_weak_error(ref: Law, approx: Law, test_function, config: MCConfig) -> Estimate:
    """Estimate ``E[phi(X_ref)] - E[phi(X_approx)]`` with common random numbers.

    Both laws are sampled from the same standard normals, so the difference
    has a much smaller variance than two independent means.
    """
    sd_ref = np.sqrt(variances(ref, config.dim))
    sd_app = np.sqrt(variances(approx, config.dim))

    def block(i, size):
        z = block_rng(config.seed, _STREAM_WEAK, i).standard_normal((size, config.dim))
        return np.broadcast_to(test_function(z * sd_ref) - test_function(z * sd_app), (size,))

    return _run_blocks(block, config.samples)


def mc_functional(fn: Callable[[np.ndarray], np.ndarray], samples: int, seed: int = 0, width: int = 1) -> Estimate:
    """Estimate ``E[fn(Z)]`` for ``Z`` standard normal of shape ``(width,)``; ``fn`` acts on ``(size, width)`` arrays."""
    if samples < 1 or width < 1:
        raise ValueError("samples and width must be positive")

    def block(i, size):
        z = block_rng(seed, _STREAM_SCALAR, i).standard_normal((size, width))
        return np.broadcast_to(fn(z), (size,))

    return _run_blocks(block, samples)


def mc_strong_error(T: float, h, mode: str, config: MCConfig) -> Estimate:
    """Estimate ``E|X(T) - X_h|^2`` for ``mode`` ``"spectral"`` (h = N) or ``"temporal"`` (h = dt).

    The spectral error is the energy of the sampled modes above ``N``; the
    temporal error uses :func:`sample_coupled_temporal`.
    """
    dim = config.dim
    if mode == "spectral":
        N = int(h)
        if N >= dim:
            return Estimate(0.0, 0.0, config.samples)
        sd = np.sqrt(variances(Exact(T), dim))[N:]

        def block(i, size):
            rng = block_rng(config.seed, _STREAM_SPECTRAL, i)
            x = rng.standard_normal((size, dim - N)) * sd
            return np.sum(x * x, axis=1)

    elif mode == "temporal":
        dt = float(h)
        if not 0 < dt < 1 or dt > T:
            raise ValueError("dt must lie in (0, 1) and not exceed T")

        def block(i, size):
            rng = block_rng(config.seed, _STREAM_COUPLED, i)
            ex, eu = sample_coupled_temporal(T, dt, dim, rng, size)
            d = ex - eu
            return np.sum(d * d, axis=1)

    else:
        raise ValueError(f"mode must be 'spectral' or 'temporal', got {mode!r}")
    return _run_blocks(block, config.samples)
