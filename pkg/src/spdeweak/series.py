"""Summation of the infinite mode series that every closed form reduces to.

Every summand handled here is a smooth function of the mode index ``n`` with a
known power-law decay ``coef * n**(-power)``.  The sum is split into an
explicit head, a Hurwitz-zeta evaluation of the leading power law, and an
Euler-Maclaurin estimate of the (faster decaying) remainder.  The result is
certified by recomputing with the cut index doubled.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate, special

Term = Callable[[np.ndarray], np.ndarray]

_CHUNK = 1 << 20


@dataclass(frozen=True)
class SeriesPolicy:
    """Truncation contract for infinite sums and improper integrals.

    ``abs_tol`` bounds the change of a reported value when the truncation
    index is doubled; ``max_terms`` caps the truncation index.
    """

    abs_tol: float = 1e-10
    max_terms: int = 10**8
    min_terms: int = 64
    tail_bound_kind: str = "analytic-integral-comparison"

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_terms < 1 or self.min_terms < 1:
            raise ValueError("term budgets must be positive")


DEFAULT_POLICY = SeriesPolicy()


@dataclass(frozen=True)
class Asymptote:
    """``term(n) ~ coef * n**(-power)`` as ``n -> inf``.

    ``power = inf`` marks a summand that vanishes identically for large n.
    """

    coef: float
    power: float

    @property
    def vanishing(self) -> bool:
        return self.coef == 0.0 or math.isinf(self.power)

    def scaled(self, factor: float, extra_power: float = 0.0) -> "Asymptote":
        """Asymptote of ``factor * n**(-extra_power) * term(n)``."""
        if self.vanishing:
            return ZERO
        return Asymptote(self.coef * factor, self.power + extra_power)

    def minus(self, other: "Asymptote") -> "Asymptote":
        """Leading behaviour of ``self_term - other_term``."""
        if other.vanishing:
            return self
        if self.vanishing:
            return Asymptote(-other.coef, other.power)
        if self.power < other.power:
            return self
        if other.power < self.power:
            return Asymptote(-other.coef, other.power)
        # equal powers: the difference may still decay faster, which only
        # makes the remainder smaller, so keeping the coefficient is safe
        return Asymptote(self.coef - other.coef, self.power)


ZERO = Asymptote(0.0, math.inf)


class SeriesResult(NamedTuple):
    value: float
    cut: int
    error: float
    certified: bool


def explicit_sum(term: Term, start: int, stop: int) -> float:
    """Plain sum of ``term(n)`` for ``start <= n < stop`` in fixed-size chunks."""
    total = 0.0
    for a in range(start, stop, _CHUNK):
        n = np.arange(a, min(stop, a + _CHUNK), dtype=np.float64)
        total += float(np.sum(term(n)))
    return total


def _scalar(term: Term, x: float) -> float:
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        return float(term(np.asarray(x, dtype=np.float64)))


def _quad(fun, a, b, tol):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(fun, a, b, epsabs=tol, epsrel=1e-13, limit=500)
    return val, err


def tail_sum(term: Term, n0: int, asymptote: Asymptote, tol: float) -> float:
    """Estimate ``sum_{n >= n0} term(n)`` for a convergent power-law tail."""
    c, p = asymptote.coef, asymptote.power
    if asymptote.vanishing:
        c, p = 0.0, 2.0
    elif p <= 1.0:
        raise ValueError(f"tail with decay power {p} <= 1 does not converge")

    def remainder(x):
        return _scalar(term, x) - (c * x ** (-p) if c else 0.0)

    def mapped(t):
        if t <= 1e-300:
            return 0.0
        x = n0 / t
        val = remainder(x) * x / t
        return val if math.isfinite(val) else 0.0

    integral, _ = _quad(mapped, 0.0, 1.0, tol)
    h = 0.25
    deriv = (remainder(n0 + h) - remainder(n0 - h)) / (2 * h)
    lead = c * float(special.zeta(p, n0)) if c else 0.0
    return lead + integral + 0.5 * remainder(n0) - deriv / 12.0


def range_sum(term: Term, n0: int, n1: int, tol: float) -> float:
    """Euler-Maclaurin estimate of ``sum_{n0 <= n <= n1} term(n)``."""
    if n1 - n0 < 4096:
        return explicit_sum(term, n0, n1 + 1)

    def mapped(u):
        x = math.exp(u)
        return _scalar(term, x) * x

    integral, _ = _quad(mapped, math.log(n0), math.log(n1), tol)
    h = 0.25

    def d(x):
        return (_scalar(term, x + h) - _scalar(term, x - h)) / (2 * h)

    return integral + 0.5 * (_scalar(term, n0) + _scalar(term, n1)) + (d(n1) - d(n0)) / 12.0


def sum_series(
    term: Term,
    start: int = 1,
    asymptote: Asymptote = ZERO,
    policy: SeriesPolicy = DEFAULT_POLICY,
    stop: int | None = None,
    smooth_from: int = 0,
) -> SeriesResult:
    """Sum ``term(n)`` over ``start <= n`` (or ``start <= n <= stop``).

    With ``stop`` given the sum is finite and evaluated term by term.  For an
    infinite sum the asymptote must describe a convergent tail.  The cut
    index is doubled until two successive estimates agree within
    ``policy.abs_tol``; if ``policy.max_terms`` is hit first the last estimate
    is returned with ``certified=False``.  The summand must be smooth in ``n``
    beyond ``smooth_from``; the explicit head always extends past it.
    """
    if stop is not None:
        if stop < start:
            return SeriesResult(0.0, start, 0.0, True)
        return SeriesResult(explicit_sum(term, start, stop + 1), stop, 0.0, True)
    if not asymptote.vanishing and asymptote.power <= 1.0:
        raise ValueError("divergent series: use partial_sum")

    tol = policy.abs_tol / 20
    n0 = max(start + max(policy.min_terms, start), smooth_from + 1)
    head = explicit_sum(term, start, n0)
    prev = head + tail_sum(term, n0, asymptote, tol)
    while True:
        n1 = 2 * n0
        if n1 > policy.max_terms:
            return SeriesResult(prev, n0, math.inf, False)
        head += explicit_sum(term, n0, n1)
        cur = head + tail_sum(term, n1, asymptote, tol)
        err = abs(cur - prev)
        if err <= policy.abs_tol / 2:
            return SeriesResult(cur, n1, err, True)
        prev, n0 = cur, n1


def partial_sum(term: Term, start: int, stop: int, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """``sum_{start <= n <= stop} term(n)`` for large ``stop`` (divergence growth curves)."""
    n0 = min(stop, start + max(policy.min_terms, 4096))
    head = explicit_sum(term, start, n0)
    if n0 >= stop:
        return head + _scalar(term, stop) if n0 == stop else head
    return head + range_sum(term, n0, stop, policy.abs_tol / 20)
