"""Moderate-deviation error bounds for shifted Poisson tail approximation.

Each evaluator bounds |P(W - a >= k) / P(Y >= k) - 1| for Y ~ Poisson(lam)
with lam = E(W) - a, itemizing the bound into named additive terms
(``BoundBreakdown``).  Three generic evaluators cover locally dependent sums,
size-bias couplings and discrete zero-bias couplings; the application
functions instantiate them with the closed-form coupling ingredients of the
six count models.  Stein factors that overflow produce an infinite total,
which keeps the bound trivially valid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .distributions import (
    occupancy_params,
    poisson_binomial_params,
    records_params,
    triangles_params,
    two_runs_params,
)
from .stein import SteinFactorSet, stein_factors

EULER_GAMMA = float(np.euler_gamma)
_PI2_6 = math.pi**2 / 6.0


@dataclass(frozen=True)
class TailShiftQuery:
    """Threshold query for P(W - a >= k) vs a Poisson(lam) tail, lam = mu - a."""

    a: int
    lam: float
    k: int

    def __post_init__(self) -> None:
        if not isinstance(self.a, int):
            raise ValueError(f"shift a must be an integer, got {self.a!r}")
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise ValueError(f"lam must be positive and finite, got {self.lam!r}")
        if self.k <= self.lam:
            raise ValueError(f"threshold k must exceed lam (k={self.k}, lam={self.lam})")

    @classmethod
    def from_mean(cls, mu: float, a: int, k: int) -> "TailShiftQuery":
        return cls(a=a, lam=mu - a, k=k)


@dataclass(frozen=True)
class LocalDependenceIngredients:
    """Scalar ingredients of the local-dependence bound.

    ``sum_term`` is sum_i theta_i * { |E(X_i - mu_i) Z_i| * E(Z_i')
    + E[|X_i - mu_i| Z_i (Z_i' - Z_i/2 - 1/2)] } over the dependency
    neighbourhoods; ``left_tail`` is (an upper bound on) P(W - a < -1).
    """

    sum_term: float
    abs_lambda_minus_sigma2: float
    left_tail: float

    def __post_init__(self) -> None:
        if min(self.sum_term, self.abs_lambda_minus_sigma2, self.left_tail) < 0.0:
            raise ValueError("bound ingredients must be non-negative")
        if self.left_tail > 1.0:
            raise ValueError(f"left tail is a probability, got {self.left_tail}")


@dataclass(frozen=True)
class SizeBiasSummary:
    """E|W + 1 - W^s| for a size-bias coupling, with the coupling family."""

    e_abs: float
    coupling_kind: Literal["negatively_related", "positively_related", "custom"]

    def __post_init__(self) -> None:
        if self.e_abs < 0.0:
            raise ValueError(f"E|W+1-W^s| must be non-negative, got {self.e_abs}")


@dataclass(frozen=True)
class BoundBreakdown:
    """A bound split into named additive terms; ``total`` is their exact sum."""

    total: float
    terms: dict[str, float]
    query: TailShiftQuery
    factors: SteinFactorSet


def _breakdown(terms: dict[str, float], query: TailShiftQuery, factors: SteinFactorSet) -> BoundBreakdown:
    return BoundBreakdown(
        total=math.fsum(terms.values()), terms=dict(terms), query=query, factors=factors
    )


def local_dependence_bound(ing: LocalDependenceIngredients, q: TailShiftQuery) -> BoundBreakdown:
    """Local-dependence bound: C2*sum_term + C1*|lam - sigma^2| + left tail."""
    f = stein_factors(q.lam, q.k)
    return _breakdown(
        {
            "main_c2_term": f.c2 * ing.sum_term,
            "c1_lambda_sigma_term": f.c1 * ing.abs_lambda_minus_sigma2,
            "left_tail_term": ing.left_tail,
        },
        q,
        f,
    )


def independent_sum_bound(
    per_summand: Sequence[tuple[float, float, float, float]],
    q: TailShiftQuery,
    sigma2: float,
    left_tail: float,
) -> BoundBreakdown:
    """Independent-sum bound from per-summand moments.

    Each entry is (theta_i, mu_i, E[X_i (X_i - mu_i)], E[|X_i - mu_i| X_i (X_i - 1)]);
    equivalent to the local-dependence bound with Z_i = Z_i' = X_i.
    """
    sum_term = math.fsum(
        theta * (mu_i * abs(exx) + 0.5 * eabs) for theta, mu_i, exx, eabs in per_summand
    )
    ing = LocalDependenceIngredients(
        sum_term=sum_term,
        abs_lambda_minus_sigma2=abs(q.lam - sigma2),
        left_tail=left_tail,
    )
    return local_dependence_bound(ing, q)


def left_tail_bound(mu: float, a: int, sum_exi2: float) -> float:
    """Exponential bound on P(W - a < -1) for independent non-negative sums:
    exp(-(mu - a + 2)^2 / (2 * sum of E X_i^2)).

    Callers with a <= 0 and W >= 0 should use the exact value 0 instead.
    """
    if not a < mu:
        raise ValueError(f"shift must satisfy a < mu, got a={a}, mu={mu}")
    if sum_exi2 <= 0.0:
        raise ValueError(f"sum of second moments must be positive, got {sum_exi2}")
    return math.exp(-((mu - a + 2.0) ** 2) / (2.0 * sum_exi2))


def size_bias_bound(
    mu: float, size_bias: SizeBiasSummary, q: TailShiftQuery, left_tail: float
) -> BoundBreakdown:
    """Size-bias bound: C1 * (mu * E|W+1-W^s| + |mu - lam|) + left tail."""
    f = stein_factors(q.lam, q.k)
    return _breakdown(
        {
            "c1_mu_term": f.c1 * mu * size_bias.e_abs,
            "c1_lambda_sigma_term": f.c1 * abs(mu - q.lam),
            "left_tail_term": left_tail,
        },
        q,
        f,
    )


def zero_bias_bound(
    sigma2: float, e_absr_thetar: float, q: TailShiftQuery, left_tail: float
) -> BoundBreakdown:
    """Zero-bias bound: C2*sigma^2*E[|R| theta_R] + C1*|lam - sigma^2|/lam + left tail.

    Unlike the local-dependence bound, the middle term carries the 1/lam.
    """
    f = stein_factors(q.lam, q.k)
    return _breakdown(
        {
            "main_c2_term": f.c2 * sigma2 * e_absr_thetar,
            "c1_lambda_sigma_term": f.c1 * abs(q.lam - sigma2) / q.lam,
            "left_tail_term": left_tail,
        },
        q,
        f,
    )


def size_bias_e_abs(
    kind: Literal["negatively_related", "positively_related"],
    mu: float,
    sigma2: float,
    sum_pi2: float | None = None,
) -> float:
    """E|W+1-W^s| for monotone couplings of Bernoulli families.

    Negatively related families give the exact value (mu - sigma^2)/mu;
    positively related ones give the bound (sigma^2 - mu + 2*sum p_i^2)/mu.
    """
    if kind == "negatively_related":
        value = (mu - sigma2) / mu
    elif kind == "positively_related":
        if sum_pi2 is None:
            raise ValueError("positively related coupling needs sum of squared probabilities")
        value = (sigma2 - mu + 2.0 * sum_pi2) / mu
    else:
        raise ValueError(f"unknown coupling kind {kind!r}")
    if value < 0.0:
        raise ValueError(f"inconsistent moments: coupling mean distance {value} < 0")
    return value


# ---------------------------------------------------------------------------
# Poisson-binomial instantiations
# ---------------------------------------------------------------------------


def _pb_theta_denominator(p: Sequence[float]) -> float:
    """The 1-or-larger divisor from the unimodality bound on max_j P(W_i = j).

    Falls back to 1 when sum min(p, 1-p) - 1/4 <= 0 (the degenerate guard).
    """
    arr = np.asarray(p, dtype=float)
    radicand = math.fsum(np.minimum(arr, 1.0 - arr).tolist()) - 0.25
    if radicand <= 0.0:
        return 1.0
    return max(1.0, math.sqrt(radicand * math.pi / 2.0))


def poisson_binomial_bound(p: Sequence[float], k: int) -> BoundBreakdown:
    """Unshifted Poisson-binomial bound C1(mu, k) * mu2, with a = 0."""
    m = poisson_binomial_params(p)
    q = TailShiftQuery.from_mean(m.mu, 0, k)
    f = stein_factors(q.lam, q.k)
    return _breakdown(
        {"c1_mu_term": f.c1 * m.mu2, "c1_lambda_sigma_term": 0.0, "left_tail_term": 0.0},
        q,
        f,
    )


def poisson_binomial_shifted_bound(p: Sequence[float], k: int) -> BoundBreakdown:
    """Shifted Poisson-binomial bound with a = floor(mu2), lam = mu - a."""
    arr = np.asarray(p, dtype=float)
    m = poisson_binomial_params(arr)
    a = math.floor(m.mu2)
    q = TailShiftQuery.from_mean(m.mu, a, k)
    f = stein_factors(q.lam, q.k)
    numerator = math.fsum((arr * arr * (1.0 - arr)).tolist())
    return _breakdown(
        {
            "main_c2_term": f.c2 * numerator / _pb_theta_denominator(arr),
            "c1_lambda_sigma_term": f.c1 * abs(q.lam - m.sigma2),
            "left_tail_term": math.exp(-((q.lam + 2.0) ** 2) / (2.0 * m.mu)),
        },
        q,
        f,
    )


@dataclass(frozen=True)
class RatioBracketInputs:
    """Inputs of the two-sided ratio bracket for unshifted Poisson-binomial tails."""

    mu: float
    mu2: float
    x: float
    M: float

    @classmethod
    def from_moments(cls, mu: float, mu2: float, k: int) -> "RatioBracketInputs":
        x = (k - mu) / math.sqrt(mu)
        if x < 1.0:
            raise ValueError(f"bracket requires x = (k - mu)/sqrt(mu) >= 1, got {x}")
        if 0.0 < mu < 1.0:
            m_const = math.exp(mu)
        else:
            if not mu2 < mu:
                raise ValueError(f"bracket requires mu2 < mu when mu >= 1, got mu2={mu2}, mu={mu}")
            m_const = math.exp(13.0 / 12.0) * math.sqrt(2.0 * math.pi) / math.sqrt(1.0 - mu2 / mu)
        return cls(mu=mu, mu2=mu2, x=x, M=m_const)


def poisson_binomial_ratio_bracket(inputs: RatioBracketInputs) -> tuple[float, float]:
    """Bracket (lower, 0) containing P(W >= k)/P(Y >= k) - 1 when x >= 1.

    The zero upper end is the monotone direction; the lower end is
    -2 M (mu2/mu) (x^2 + 1 + 4 x sqrt((1 - e^-mu)/mu)).
    """
    mu, x = inputs.mu, inputs.x
    if x < 1.0:
        raise ValueError(f"bracket requires x >= 1, got {x}")
    spread = x * x + 1.0 + 4.0 * x * math.sqrt(-math.expm1(-mu) / mu)
    return (-2.0 * inputs.M * (inputs.mu2 / mu) * spread, 0.0)


def records_bound(n: int, k: int) -> float:
    """Width of the record-count ratio bracket, from harmonic-series estimates.

    Requires x = (k - lam_n)/sqrt(lam_n) >= 1 and ln n + gamma > pi^2/6.
    """
    lam_n = records_params(n).mu
    x = (k - lam_n) / math.sqrt(lam_n)
    if x < 1.0:
        raise ValueError(f"records bracket requires x >= 1, got {x}")
    log_term = math.log(n) + EULER_GAMMA
    if log_term - _PI2_6 <= 0.0:
        raise ValueError(f"records bracket needs ln(n) + gamma > pi^2/6, got n={n}")
    front = (
        2.0
        * math.exp(13.0 / 12.0)
        * math.sqrt(2.0 * math.pi)
        * (_PI2_6 - 1.0)
        / math.sqrt((log_term - 1.0) * (log_term - _PI2_6))
    )
    return front * (x * x + 1.0 + 4.0 * x / math.sqrt(log_term - 1.0))


# ---------------------------------------------------------------------------
# Remaining application bounds (all with a = 0 except the shifted 2-runs one)
# ---------------------------------------------------------------------------


def matching_bound(n: int, k: int) -> float:
    """(2/n) * C1(1, k) for the fixed-point count; defined for k >= 2 only."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if k < 2:
        raise ValueError(f"matching bound requires k >= 2, got {k}")
    return (2.0 / n) * stein_factors(1.0, k).c1


def occupancy_bound(n: int, l: int, k: int) -> float:
    """C1(mu, k) * mu * [mu - (n-1)(1 - 1/(n-1))^l] for the empty-box count."""
    m = occupancy_params(n, l)
    if k <= m.mu:
        raise ValueError(f"need k > mu = {m.mu}, got k={k}")
    coupling = m.mu - (n - 1) * (1.0 - 1.0 / (n - 1)) ** l
    return stein_factors(m.mu, k).c1 * m.mu * coupling


def birthday_bound(n: int, l: int, k: int) -> float:
    """C1(mu, k) * mu * (1 + 2l)/n for the same-box pair count."""
    mu = math.comb(l, 2) / n
    if mu <= 0.0:
        raise ValueError(f"need at least two balls for a pair, got l={l}")
    if k <= mu:
        raise ValueError(f"need k > mu = {mu}, got k={k}")
    return stein_factors(mu, k).c1 * mu * (1.0 + 2.0 * l) / n


def triangles_bound(n: int, p: float, k: int) -> float:
    """C1(mu, k) * mu * (3(n-3)p^2(1-p) + p^3) for the triangle count."""
    m = triangles_params(n, p)
    if k <= m.mu:
        raise ValueError(f"need k > mu = {m.mu}, got k={k}")
    return stein_factors(m.mu, k).c1 * m.mu * (3.0 * (n - 3) * p * p * (1.0 - p) + p**3)


def two_runs_bound(n: int, p: float, k: int) -> float:
    """C1(mu, k) * n p^3 (2 - p) for the cyclic 2-run count, a = 0."""
    m = two_runs_params(n, p)
    if k <= m.mu:
        raise ValueError(f"need k > mu = {m.mu}, got k={k}")
    return stein_factors(m.mu, k).c1 * n * p**3 * (2.0 - p)


def two_runs_shift(n: int, p: float) -> int:
    """The variance-matching shift a = floor(n p^3 (3p - 2)); <= 0 for p < 2/3."""
    return math.floor(n * p**3 * (3.0 * p - 2.0))


def two_runs_bound_shifted(n: int, p: float, k: int) -> BoundBreakdown:
    """Shifted 2-runs bound; needs n >= 9 and p < 2/3.

    With a = floor(n p^3 (3p-2)) <= 0 and W >= 0 the left tail is exactly 0.
    """
    if n < 9:
        raise ValueError(f"shifted 2-runs bound needs n >= 9, got {n}")
    if not 0.0 < p < 2.0 / 3.0:
        raise ValueError(f"shifted 2-runs bound needs p < 2/3, got {p}")
    m = two_runs_params(n, p)
    a = two_runs_shift(n, p)
    q = TailShiftQuery.from_mean(m.mu, a, k)
    f = stein_factors(q.lam, q.k)
    main = f.c2 * 9.2 * n * p * p * (1.0 + 5.0 * p) / math.sqrt((n - 8) * (1.0 - p) ** 3)
    return _breakdown(
        {
            "main_c2_term": main,
            "c1_lambda_sigma_term": f.c1 * min(1.0, q.lam),
            "left_tail_term": 0.0,
        },
        q,
        f,
    )
