"""Exact distributions of the six rare-event count models.

Each constructor returns a ``DistributionTable`` holding the pmf in log
space together with a rigorous upper bound on any probability mass outside
the stored window, so right tails can always be reported as a bracket
``[t, t + truncated_mass]``.  Small-instance constructors are exact (rational
arithmetic or full enumeration); the Poisson-binomial constructor is a
convolution DP with an adaptive upper window for long inputs such as the
record-count law at n = 1e5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence, Union

import numpy as np

from .logtails import NEG_INF, LogProb

#: Acceptable defect of total stored mass + truncated mass from 1.
MASS_TOL = 1e-12


@dataclass(frozen=True)
class MomentSummary:
    """Mean and variance of a count variable; ``mu2`` is the sum of squared
    success probabilities and only applies to Bernoulli-sum models."""

    mu: float
    sigma2: float
    mu2: float | None = None


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Tail-probability estimate with its binomial standard error and 95% CI."""

    p_hat: float
    stderr: float
    n_samples: int
    seed: int
    ci95_low: float
    ci95_high: float


@dataclass
class DistributionTable:
    """Pmf of an integer variable on a window, with tracked truncation mass.

    ``log_pmf[j]`` is ln P(W = offset + j); ``-inf`` encodes zero mass.
    ``truncated_mass`` bounds the probability outside the window (all of it
    above the window for the constructors here, so tail brackets are exact).
    """

    offset: int
    log_pmf: np.ndarray
    truncated_mass: float = 0.0
    _pmf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.log_pmf = np.asarray(self.log_pmf, dtype=float)
        self.truncated_mass = float(self.truncated_mass)
        with np.errstate(over="ignore"):
            self._pmf = np.exp(self.log_pmf)

    @property
    def support_max(self) -> int:
        return self.offset + len(self.log_pmf) - 1

    def pmf(self, j: int) -> float:
        if j < self.offset or j > self.support_max:
            return 0.0
        return float(self._pmf[j - self.offset])

    def pmf_array(self) -> np.ndarray:
        return self._pmf.copy()

    def total_stored_mass(self) -> float:
        return float(math.fsum(self._pmf.tolist()))

    def log_tail(self, k: int) -> LogProb:
        """ln of the stored mass at or above k (lower bound on ln P(W >= k))."""
        lo = max(k, self.offset)
        if lo > self.support_max:
            return NEG_INF
        block = self.log_pmf[lo - self.offset :]
        m = float(np.max(block))
        if m == NEG_INF:
            return NEG_INF
        return m + math.log(float(np.sum(np.exp(block - m))))

    def tail_bracket(self, k: int) -> tuple[float, float]:
        """[lo, hi] bracket for P(W >= k); exact mass plus the truncation bound."""
        lo = math.exp(self.log_tail(k)) if self.log_tail(k) > NEG_INF else 0.0
        return lo, min(1.0, lo + self.truncated_mass)

    def cdf(self, k: int) -> float:
        """Stored mass at or below k (exact when nothing was truncated)."""
        if k < self.offset:
            return 0.0
        hi = min(k, self.support_max)
        return float(math.fsum(self._pmf[: hi - self.offset + 1].tolist()))

    def mean(self) -> float:
        support = self.offset + np.arange(len(self._pmf))
        return float(np.dot(support, self._pmf))

    def variance(self) -> float:
        support = self.offset + np.arange(len(self._pmf))
        m = self.mean()
        return float(np.dot((support - m) ** 2, self._pmf))

    def is_unimodal(self, tol: float = 1e-15) -> bool:
        """No strict interior local minimum of the pmf (up to rounding noise)."""
        p = self._pmf
        slack = tol * float(np.max(p))
        for j in range(1, len(p) - 1):
            if p[j] < p[j - 1] - slack and p[j] < p[j + 1] - slack:
                return False
        return True

    def to_csv(self, params: dict | None = None) -> str:
        """Serialize as CSV (columns k, pmf, log_pmf); the header block echoes
        the model parameters and the truncated mass."""
        echo = " ".join(f"{key}={value}" for key, value in sorted((params or {}).items()))
        lines = [
            f"# model: {echo}" if echo else "# model:",
            f"# truncated_mass: {format(self.truncated_mass, '.17g')}",
            "k,pmf,log_pmf",
        ]
        for j, (mass, log_mass) in enumerate(zip(self._pmf, self.log_pmf)):
            lines.append(
                f"{self.offset + j},{format(float(mass), '.17g')},{format(float(log_mass), '.17g')}"
            )
        return "\r\n".join(lines) + "\r\n"


def _log_fraction(fr: Fraction) -> float:
    if fr == 0:
        return NEG_INF
    # math.log on big ints keeps full precision where float(fr) would overflow
    return math.log(fr.numerator) - math.log(fr.denominator)


def _table_from_fractions(values: Sequence[Fraction], offset: int = 0) -> DistributionTable:
    total = sum(values)
    if total != 1:
        raise AssertionError(f"exact pmf does not sum to 1 (defect {float(1 - total)!r})")
    return DistributionTable(
        offset=offset,
        log_pmf=np.array([_log_fraction(v) for v in values]),
        truncated_mass=0.0,
    )


class AccuracyError(ArithmeticError):
    """A requested tail cannot be certified to the demanded truncation level."""


# ---------------------------------------------------------------------------
# Poisson-binomial (independent Bernoulli sum), covering the record counts
# ---------------------------------------------------------------------------


def _validate_probs(p: Sequence[float]) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("need a non-empty 1-d sequence of probabilities")
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError("all success probabilities must lie strictly in (0, 1)")
    return arr


def poisson_binomial_params(p: Sequence[float]) -> MomentSummary:
    arr = _validate_probs(p)
    mu = math.fsum(arr.tolist())
    mu2 = math.fsum((arr * arr).tolist())
    return MomentSummary(mu=mu, sigma2=mu - mu2, mu2=mu2)


def _pb_convolve(p: np.ndarray, cap: int) -> tuple[np.ndarray, float]:
    """Convolution DP on support 0..cap; returns (pmf, mass lost above cap).

    Counts only ever increase, so mass pushed past the cap never re-enters:
    accumulating the overflow term exactly accounts for all truncated mass.
    """
    pmf = np.zeros(cap + 1)
    pmf[0] = 1.0
    nxt = np.empty_like(pmf)
    lost = 0.0
    for pi in p:
        lost += pmf[cap] * pi
        np.multiply(pmf, 1.0 - pi, out=nxt)
        nxt[1:] += pmf[:-1] * pi
        pmf, nxt = nxt, pmf
    return pmf, lost


def poisson_binomial_table(
    p: Sequence[float],
    *,
    target_k: int | None = None,
    tail_rtol: float = 1e-15,
) -> DistributionTable:
    """Exact pmf of a sum of independent Bernoulli(p_i) variables.

    For long inputs the support is truncated above ``mean + 60*sd`` (widened
    until the truncated mass is below ``tail_rtol`` of the stored tail at
    ``target_k``, when given); the truncated mass all lies above the cap, so
    ``tail_bracket`` stays rigorous.  Raises ``AccuracyError`` if the demand
    cannot be met even at full support (cannot happen: full support is exact).
    """
    arr = _validate_probs(p)
    n = arr.size
    moments = poisson_binomial_params(arr)
    sd = math.sqrt(max(moments.sigma2, 0.0))

    mult = 60.0
    while True:
        cap = min(n, int(math.ceil(moments.mu + mult * sd)) + 8)
        pmf, lost = _pb_convolve(arr, cap)
        table = DistributionTable(
            offset=0,
            log_pmf=np.where(pmf > 0.0, np.log(np.maximum(pmf, 1e-320)), NEG_INF),
            truncated_mass=lost,
        )
        if cap >= n or target_k is None:
            return table
        tail_lo, _ = table.tail_bracket(target_k)
        if lost <= tail_rtol * tail_lo:
            return table
        mult *= 2.0
        if mult > 1e5:  # pragma: no cover - cap reaches n long before this
            raise AccuracyError(
                f"cannot reach truncation target {tail_rtol} for tail at k={target_k}"
            )


def records_success_probs(n: int) -> np.ndarray:
    """Success probabilities 1/i, i = 2..n, of the record indicators."""
    if n < 2:
        raise ValueError(f"need n >= 2 observations for any record count, got {n}")
    return 1.0 / np.arange(2, n + 1)


def records_params(n: int) -> MomentSummary:
    """Mean and variance of the number of records among n observations."""
    return poisson_binomial_params(records_success_probs(n))


# ---------------------------------------------------------------------------
# Matching problem (fixed points of a uniform random permutation)
# ---------------------------------------------------------------------------


def matching_table(n: int) -> DistributionTable:
    """Exact law of the number of fixed points: P(W=k) = (1/k!) sum_j (-1)^j / j!."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    values = []
    for k in range(n + 1):
        alternating = sum(Fraction((-1) ** j, math.factorial(j)) for j in range(n - k + 1))
        values.append(alternating / math.factorial(k))
    return _table_from_fractions(values)


# ---------------------------------------------------------------------------
# Occupancy problem (empty boxes after l uniform throws into n boxes)
# ---------------------------------------------------------------------------


def occupancy_table(n: int, l: int) -> DistributionTable:
    """Exact law of the number of empty boxes, by inclusion-exclusion.

    Rational arithmetic sidesteps the alternating-series cancellation that
    breaks a floating-point evaluation once n*l grows.
    """
    if n < 2:
        raise ValueError(f"need n >= 2 boxes, got {n}")
    if l < 1:
        raise ValueError(f"need l >= 1 balls, got {l}")
    values = []
    for m in range(n + 1):
        acc = Fraction(0)
        for j in range(n - m + 1):
            acc += (-1) ** j * math.comb(n - m, j) * Fraction(n - m - j, n) ** l
        values.append(math.comb(n, m) * acc)
    return _table_from_fractions(values)


def occupancy_params(n: int, l: int) -> MomentSummary:
    if n < 2 or l < 1:
        raise ValueError(f"need n >= 2 and l >= 1, got n={n}, l={l}")
    mu = n * (1.0 - 1.0 / n) ** l
    sigma2 = mu - mu * mu + mu * (n - 1) * (1.0 - 1.0 / (n - 1)) ** l
    return MomentSummary(mu=mu, sigma2=sigma2)


# ---------------------------------------------------------------------------
# Birthday problem (same-box pairs among l balls in n boxes)
# ---------------------------------------------------------------------------


def _partitions_at_most(total: int, max_parts: int, max_value: int | None = None) -> Iterator[tuple[int, ...]]:
    if total == 0:
        yield ()
        return
    if max_parts == 0:
        return
    if max_value is None or max_value > total:
        max_value = total
    for first in range(max_value, 0, -1):
        for rest in _partitions_at_most(total - first, max_parts - 1, first):
            yield (first, *rest)


def birthday_table_small(n: int, l: int) -> DistributionTable:
    """Exact law of the number of same-box pairs, for n^l up to 1e8.

    Enumerates occupancy-count partitions with multinomial weights, which is
    equivalent to enumerating all n^l assignments but polynomial in (n, l).
    """
    if n < 1 or l < 1:
        raise ValueError(f"need n >= 1 and l >= 1, got n={n}, l={l}")
    if n**l > 10**8:
        raise ValueError(
            f"n^l = {n**l} exceeds the exact-enumeration guard (1e8); use monte_carlo_tail"
        )
    w_max = math.comb(l, 2)
    values = [Fraction(0)] * (w_max + 1)
    denom = Fraction(n) ** l
    for parts in _partitions_at_most(l, n):
        w = sum(math.comb(c, 2) for c in parts)
        ways_balls = math.factorial(l)
        for c in parts:
            ways_balls //= math.factorial(c)
        ways_boxes = math.factorial(n) // math.factorial(n - len(parts))
        for mult in _value_multiplicities(parts):
            ways_boxes //= math.factorial(mult)
        values[w] += Fraction(ways_balls * ways_boxes) / denom
    return _table_from_fractions(values)


def _value_multiplicities(parts: tuple[int, ...]) -> list[int]:
    mults: dict[int, int] = {}
    for c in parts:
        mults[c] = mults.get(c, 0) + 1
    return list(mults.values())


def birthday_mu(n: int, l: int) -> float:
    """Mean number of same-box pairs: C(l,2)/n."""
    if n < 1 or l < 1:
        raise ValueError(f"need n >= 1 and l >= 1, got n={n}, l={l}")
    return math.comb(l, 2) / n


# ---------------------------------------------------------------------------
# Triangles in a G(n, p) random graph
# ---------------------------------------------------------------------------


def triangles_table_small(n: int, p: float) -> DistributionTable:
    """Exact law of the triangle count by enumerating all 2^C(n,2) edge sets."""
    if n < 3:
        raise ValueError(f"need n >= 3 vertices, got {n}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"edge probability must lie in (0, 1), got {p}")
    m = math.comb(n, 2)
    if m > 24:
        raise ValueError(
            f"C(n,2) = {m} exceeds the exact-enumeration guard (24); use monte_carlo_tail"
        )
    edge_index = {}
    for i in range(n):
        for j in range(i + 1, n):
            edge_index[(i, j)] = len(edge_index)
    masks = np.arange(1 << m, dtype=np.int64)
    edge_count = np.zeros(1 << m, dtype=np.int64)
    for b in range(m):
        edge_count += (masks >> b) & 1
    w = np.zeros(1 << m, dtype=np.int64)
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                tri = (
                    (1 << edge_index[(a, b)])
                    | (1 << edge_index[(a, c)])
                    | (1 << edge_index[(b, c)])
                )
                w += (masks & tri) == tri
    weights = np.power(p, edge_count) * np.power(1.0 - p, m - edge_count)
    pmf = np.bincount(w, weights=weights, minlength=math.comb(n, 3) + 1)
    return DistributionTable(
        offset=0,
        log_pmf=np.where(pmf > 0.0, np.log(np.maximum(pmf, 1e-320)), NEG_INF),
        truncated_mass=0.0,
    )


def triangles_params(n: int, p: float) -> MomentSummary:
    if n < 3 or not 0.0 < p < 1.0:
        raise ValueError(f"need n >= 3 and p in (0,1), got n={n}, p={p}")
    mu = math.comb(n, 3) * p**3
    sigma2 = mu * (1.0 - p**3 + 3.0 * (n - 3) * (p**2 - p**3))
    return MomentSummary(mu=mu, sigma2=sigma2)


# ---------------------------------------------------------------------------
# 2-runs (adjacent success pairs in a cyclic Bernoulli sequence)
# ---------------------------------------------------------------------------


def two_runs_table(n: int, p: float) -> DistributionTable:
    """Exact law of the cyclic 2-run count, by a transfer DP conditioned on
    the first bit; the wrap-around edge last*first closes the cycle."""
    if n < 3:
        raise ValueError(f"need n >= 3 positions, got {n}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"success probability must lie in (0, 1), got {p}")
    q = 1.0 - p
    pmf = np.zeros(n + 1)
    for first in (0, 1):
        # dp[prev, w]: probability of bits 2..pos with w pairs so far
        dp = np.zeros((2, n + 1))
        dp[first, 0] = 1.0
        for _pos in range(2, n + 1):
            nxt = np.zeros_like(dp)
            nxt[0] = (dp[0] + dp[1]) * q
            nxt[1] += dp[0] * p
            nxt[1, 1:] += dp[1, :-1] * p
            dp = nxt
        w_first = p if first == 1 else q
        if first == 1:
            pmf[1:] += dp[1, :-1] * w_first  # closing edge: last=1 and first=1
            pmf += dp[0] * w_first
        else:
            pmf += (dp[0] + dp[1]) * w_first
    return DistributionTable(
        offset=0,
        log_pmf=np.where(pmf > 0.0, np.log(np.maximum(pmf, 1e-320)), NEG_INF),
        truncated_mass=0.0,
    )


def two_runs_params(n: int, p: float) -> MomentSummary:
    if n < 3 or not 0.0 < p < 1.0:
        raise ValueError(f"need n >= 3 and p in (0,1), got n={n}, p={p}")
    mu = n * p * p
    return MomentSummary(mu=mu, sigma2=mu * (1.0 - p) * (3.0 * p + 1.0))


# ---------------------------------------------------------------------------
# Application models (tagged union dispatched by table/moment constructors)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Records:
    n: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"Records needs n >= 2, got {self.n}")


@dataclass(frozen=True)
class PoissonBinomial:
    p: tuple[float, ...]

    def __post_init__(self) -> None:
        _validate_probs(self.p)


@dataclass(frozen=True)
class Matching:
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"Matching needs n >= 1, got {self.n}")


@dataclass(frozen=True)
class Occupancy:
    n: int
    l: int

    def __post_init__(self) -> None:
        if self.n < 2 or self.l < 1:
            raise ValueError(f"Occupancy needs n >= 2 and l >= 1, got {self}")


@dataclass(frozen=True)
class Birthday:
    n: int
    l: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.l < 1:
            raise ValueError(f"Birthday needs n >= 1 and l >= 1, got {self}")


@dataclass(frozen=True)
class Triangles:
    n: int
    p: float

    def __post_init__(self) -> None:
        if self.n < 3 or not 0.0 < self.p < 1.0:
            raise ValueError(f"Triangles needs n >= 3 and p in (0,1), got {self}")


@dataclass(frozen=True)
class TwoRuns:
    n: int
    p: float

    def __post_init__(self) -> None:
        if self.n < 3 or not 0.0 < self.p < 1.0:
            raise ValueError(f"TwoRuns needs n >= 3 and p in (0,1), got {self}")


AppModel = Union[Records, PoissonBinomial, Matching, Occupancy, Birthday, Triangles, TwoRuns]


def exact_table(model: AppModel, *, target_k: int | None = None) -> DistributionTable:
    """Exact distribution table of the model's count variable."""
    match model:
        case Records(n=n):
            return poisson_binomial_table(records_success_probs(n), target_k=target_k)
        case PoissonBinomial(p=p):
            return poisson_binomial_table(p, target_k=target_k)
        case Matching(n=n):
            return matching_table(n)
        case Occupancy(n=n, l=l):
            return occupancy_table(n, l)
        case Birthday(n=n, l=l):
            return birthday_table_small(n, l)
        case Triangles(n=n, p=p):
            return triangles_table_small(n, p)
        case TwoRuns(n=n, p=p):
            return two_runs_table(n, p)
    raise TypeError(f"unknown model {model!r}")
