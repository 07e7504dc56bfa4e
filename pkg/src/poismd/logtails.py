"""Log-domain tail primitives for Poisson and normal distributions.

Probabilities are carried as natural logarithms (``LogProb``) so that tails
far below the double-precision underflow threshold remain representable;
``-inf`` encodes probability zero.  Linear-domain values are produced only at
the boundary by exponentiating.

The Poisson tail functions evaluate the regularized incomplete gamma function
entirely in log space, switching between the ascending series and the Lentz
continued fraction at the standard pivot so that whichever of F(k) and
F̄(k) is small is always the one computed directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, TypeAlias

from scipy.special import erfcx

LogProb: TypeAlias = float

NEG_INF = float("-inf")
_LN2 = math.log(2.0)
_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)

_SERIES_EPS = 1e-18
_CF_EPS = 4e-16
_MAX_ITER = 10_000


def _validate_mean(lam: float) -> float:
    lam = float(lam)
    if not math.isfinite(lam) or lam <= 0.0:
        raise ValueError(f"Poisson mean must be positive and finite, got {lam!r}")
    return lam


def _validate_count(k, minimum: int) -> int:
    if isinstance(k, float) and not k.is_integer():
        raise ValueError(f"count must be an integer, got {k!r}")
    k = int(k)
    if k < minimum:
        raise ValueError(f"count must be >= {minimum}, got {k}")
    return k


def log1mexp(t: float) -> float:
    """ln(1 - e^t) for t <= 0, stable near both endpoints."""
    if t > 0.0:
        raise ValueError(f"log1mexp requires t <= 0, got {t!r}")
    if t == 0.0:
        return NEG_INF
    if t > -_LN2:
        return math.log(-math.expm1(t))
    return math.log1p(-math.exp(t))


def log_sum_exp(xs: Iterable[LogProb]) -> LogProb:
    """ln(sum of e^x) over the sequence; the empty sum is log-zero (-inf)."""
    values = [float(x) for x in xs]
    if not values:
        return NEG_INF
    m = max(values)
    if m == NEG_INF:
        return NEG_INF
    total = math.fsum(math.exp(x - m) for x in values)
    return m + math.log(total)


def log_diff_exp(a: LogProb, b: LogProb) -> LogProb:
    """ln(e^a - e^b); requires a >= b (probabilities cannot go negative)."""
    if math.isnan(a) or math.isnan(b):
        raise ValueError("log_diff_exp does not accept NaN")
    if a < b:
        raise ValueError(f"log_diff_exp requires a >= b, got a={a!r} < b={b!r}")
    if b == NEG_INF:
        return a
    if a == b:
        return NEG_INF
    return a + log1mexp(b - a)


def _log_reg_lower_series(a: float, x: float) -> float:
    """ln P(a, x) by the ascending series; converges well for x < a + 1."""
    term = 1.0
    total = 1.0
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if term < total * _SERIES_EPS:
            return a * math.log(x) - x - math.lgamma(a + 1.0) + math.log(total)
    raise ArithmeticError(f"incomplete-gamma series failed to converge (a={a}, x={x})")


def _log_reg_upper_cf(a: float, x: float) -> float:
    """ln Q(a, x) by the Lentz continued fraction; converges well for x >= a + 1."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return a * math.log(x) - x - math.lgamma(a) + math.log(h)
    raise ArithmeticError(f"incomplete-gamma continued fraction failed to converge (a={a}, x={x})")


def log_poisson_pmf(lam: float, k: int) -> LogProb:
    """ln P(Y = k) for Y ~ Poisson(lam): k ln(lam) - lam - ln(k!)."""
    lam = _validate_mean(lam)
    k = _validate_count(k, minimum=0)
    if k == 0:
        return -lam
    return k * math.log(lam) - lam - math.lgamma(k + 1.0)


def log_poisson_sf(lam: float, k: int) -> LogProb:
    """ln P(Y >= k) for Y ~ Poisson(lam).

    For k >= 1 this is the regularized lower incomplete gamma P(k, lam); the
    small side of the pair (survival vs. cdf) is always computed directly so
    the relative error of the probability stays ~1e-14 down to 1e-300.
    """
    lam = _validate_mean(lam)
    k = _validate_count(k, minimum=0)
    if k == 0:
        return 0.0
    if lam < k + 1.0:
        return _log_reg_lower_series(float(k), lam)
    return log1mexp(_log_reg_upper_cf(float(k), lam))


def log_poisson_cdf(lam: float, k: int) -> LogProb:
    """ln P(Y <= k) for Y ~ Poisson(lam); k = -1 is the empty event (log-zero)."""
    lam = _validate_mean(lam)
    k = _validate_count(k, minimum=-1)
    if k == -1:
        return NEG_INF
    a = float(k + 1)
    if lam >= a + 1.0:
        return _log_reg_upper_cf(a, lam)
    return log1mexp(_log_reg_lower_series(a, lam))


def log_normal_sf(mu: float, sigma: float, x: float) -> LogProb:
    """ln P(N(mu, sigma^2) >= x) via the scaled complementary error function."""
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma <= 0.0:
        raise ValueError(f"sigma must be positive and finite, got {sigma!r}")
    z = (float(x) - float(mu)) / sigma
    if z >= 0.0:
        # P(Z >= z) = erfc(z/sqrt(2))/2 = erfcx(z/sqrt(2)) e^{-z^2/2} / 2
        return math.log(0.5 * float(erfcx(z / _SQRT2))) - 0.5 * z * z
    return log1mexp(log_normal_sf(0.0, 1.0, -z))


@dataclass(frozen=True)
class PoissonTailTriple:
    """Point mass, left tail and right tail of a Poisson law around one threshold.

    ``log_cdf_km1`` and ``log_sf_k`` are exact complements (F(k-1) + F̄(k) = 1)
    and the pmf satisfies the balance identity lam*pmf(k) = (k+1)*pmf(k+1).
    """

    lam: float
    k: int
    log_pmf_k: LogProb
    log_cdf_km1: LogProb
    log_sf_k: LogProb


def poisson_tail_triple(lam: float, k: int) -> PoissonTailTriple:
    lam = _validate_mean(lam)
    k = _validate_count(k, minimum=0)
    return PoissonTailTriple(
        lam=lam,
        k=k,
        log_pmf_k=log_poisson_pmf(lam, k),
        log_cdf_km1=log_poisson_cdf(lam, k - 1),
        log_sf_k=log_poisson_sf(lam, k),
    )
