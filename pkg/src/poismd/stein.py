"""Stein-equation solution norms for Poisson right-tail indicator test functions.

For Y ~ Poisson(lam) and the test function 1[j >= k] with threshold k > lam,
the bounded solution f of

    lam * f(j+1) - j * f(j) = 1[j >= k] - P(Y >= k),   f(0) = f(1),

has closed-form sup norms of f, of its first difference and of its second
difference.  Those norms, divided by P(Y >= k), are the constants this module
computes (``SteinFactorSet``); they are the amplification factors appearing in
the moderate-deviation error bounds and improve on the naive factor
(1 - e^{-lam}) / (lam * P(Y >= k)) from classical total-variation arguments.

``solve_stein_equation`` evaluates f two independent ways -- the hitting-time
closed form and the forward recursion of the defining identity -- and
certifies their agreement.  The forward recursion is exponentially unstable
past k in double precision (the homogeneous solution grows like (j/lam)^j),
so the recursion route runs in extended precision sized to the expected digit
loss; closed-form production values stay in ordinary floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp

from .logtails import (
    NEG_INF,
    log1mexp,
    log_poisson_cdf,
    log_poisson_pmf,
    log_poisson_sf,
)

#: Relative tolerance for route agreement and sup-norm identities.
ROUTE_RTOL = 1e-10


class SteinConsistencyError(ArithmeticError):
    """The two independent solution routes disagree; signals a numerics bug."""


@dataclass(frozen=True)
class SteinFactorSet:
    """Solution-norm constants at one (lam, k), plus the naive comparator.

    ``c1 = max(c1_minus, c1_plus)`` and ``c2 = c1_minus + c1_plus`` hold by
    construction; ``c1_minus`` and ``c1_plus`` never exceed ``c0``.
    """

    lam: float
    k: int
    c0: float
    c1_minus: float
    c1_plus: float
    c1: float
    c2: float
    naive: float


@dataclass(frozen=True)
class SteinSolution:
    """Certified solution values f(0..i_max) with the f(0) = f(1) convention."""

    lam: float
    k: int
    i_max: int
    f: tuple[float, ...]


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class SolutionReport:
    """Named structural checks of the solved equation at one (lam, k)."""

    lam: float
    k: int
    i_max: int
    checks: tuple[PropertyCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[PropertyCheck]:
        return [c for c in self.checks if not c.passed]


@dataclass(frozen=True)
class GapScanRow:
    """One (lam, k) point of the c1_minus - c1_plus gap scan."""

    lam: float
    k: int
    gap: float
    log_gap: float
    gap_positive: bool


def _exp_or_inf(log_value: float) -> float:
    if log_value == NEG_INF:
        return 0.0
    try:
        return math.exp(log_value)
    except OverflowError:
        return math.inf


def _validate_threshold(lam: float, k) -> tuple[float, int]:
    lam = float(lam)
    if not math.isfinite(lam) or lam <= 0.0:
        raise ValueError(f"Poisson mean must be positive and finite, got {lam!r}")
    if isinstance(k, float) and not k.is_integer():
        raise ValueError(f"threshold k must be an integer, got {k!r}")
    k = int(k)
    if k < 1:
        raise ValueError(f"threshold k must be >= 1, got {k}")
    if k <= lam:
        raise ValueError(f"threshold k must exceed the Poisson mean (k={k}, lam={lam})")
    return lam, k


def stein_factors(lam: float, k: int) -> SteinFactorSet:
    """Evaluate the solution-norm constants at (lam, k), k > lam.

    All cdf/survival ratios are formed as exponentials of log differences;
    dividing tiny linear tail values directly would underflow for k >> lam.
    At k = 1 the left ratio uses the F(-1) = 0 empty-sum convention.
    """
    lam, k = _validate_threshold(lam, k)
    log_cdf_km1 = log_poisson_cdf(lam, k - 1)
    log_c0 = log_cdf_km1 - math.log(k) - log_poisson_pmf(lam, k)
    c0 = _exp_or_inf(log_c0)

    if k == 1:
        one_minus_lower = 1.0  # F(-1) = 0 kills the ratio before the 0/0
    else:
        log_lower = (
            log_poisson_cdf(lam, k - 2)
            - log_cdf_km1
            + math.log(lam)
            - math.log(k - 1)
        )
        one_minus_lower = max(0.0, -math.expm1(min(log_lower, 0.0)))

    log_upper = (
        log_poisson_sf(lam, k + 1)
        - log_poisson_sf(lam, k)
        + math.log(k)
        - math.log(lam)
    )
    one_minus_upper = max(0.0, -math.expm1(min(log_upper, 0.0)))

    c1_minus = c0 * one_minus_lower
    c1_plus = c0 * one_minus_upper
    log_naive = log1mexp(-lam) - math.log(lam) - log_poisson_sf(lam, k)
    return SteinFactorSet(
        lam=lam,
        k=k,
        c0=c0,
        c1_minus=c1_minus,
        c1_plus=c1_plus,
        c1=max(c1_minus, c1_plus),
        c2=c1_minus + c1_plus,
        naive=_exp_or_inf(log_naive),
    )


def default_i_max(lam: float, k: int) -> int:
    """Default truncation index: differences decay geometrically past k."""
    return k + math.ceil(10.0 + 10.0 * math.sqrt(lam))


def _closed_form_values(lam: float, k: int, i_max: int) -> list[float]:
    """f(0..i_max) from the hitting-time closed form, assembled in log space."""
    log_lam = math.log(lam)
    log_sf_k = log_poisson_sf(lam, k)
    log_cdf_km1 = log_poisson_cdf(lam, k - 1)
    f = [0.0] * (i_max + 1)
    for i in range(1, i_max + 1):
        if i <= k:
            log_abs = log_poisson_cdf(lam, i - 1) - log_lam - log_poisson_pmf(lam, i - 1) + log_sf_k
        else:
            log_abs = log_poisson_sf(lam, i) - math.log(i) - log_poisson_pmf(lam, i) + log_cdf_km1
        f[i] = -math.exp(log_abs)
    f[0] = f[1]
    return f


def _recursion_dps(lam: float, k: int, i_max: int) -> int:
    """Working digits for the recursion route, sized to the expected digit loss.

    Past k the relative error of the forward recursion grows by ~j/lam per
    step, so the loss is the summed log10 of those per-step factors.
    """
    loss = 0.0
    for j in range(k, i_max):
        ratio = (j + 1) / lam
        if ratio > 1.0:
            loss += math.log10(ratio)
    return min(1200, 40 + int(loss) + i_max // 20)


def _recursion_values(lam: float, k: int, i_max: int) -> tuple[list[mp.mpf], mp.mpf, int]:
    """f(0..i_max) by forward recursion of the defining identity, plus P(Y >= k)."""
    dps = _recursion_dps(lam, k, i_max)
    with mp.workdps(dps):
        lam_mp = mp.mpf(lam)
        sf_k = mp.gammainc(k, 0, lam_mp, regularized=True)
        f = [mp.mpf(0)] * (i_max + 1)
        f[1] = -sf_k / lam_mp
        for j in range(1, i_max):
            h = 1 if j >= k else 0
            f[j + 1] = (h - sf_k + j * f[j]) / lam_mp
        f[0] = f[1]
    return f, sf_k, dps


def _routes_agree(closed: list[float], recursion: list[mp.mpf]) -> tuple[bool, str]:
    worst = 0.0
    worst_i = -1
    for i, (a, b) in enumerate(zip(closed, recursion)):
        bf = float(b)
        rel = abs(a - bf) / max(abs(bf), 1e-290)
        if rel > worst:
            worst, worst_i = rel, i
    return worst <= ROUTE_RTOL, f"max relative route gap {worst:.3e} at i={worst_i}"


def solve_stein_equation(lam: float, k: int, i_max: int | None = None) -> SteinSolution:
    """Solve for f on 0..i_max by two routes and certify their agreement.

    Raises ``SteinConsistencyError`` when the closed form and the recursion
    disagree beyond ``ROUTE_RTOL`` anywhere on the range.
    """
    lam, k = _validate_threshold(lam, k)
    if i_max is None:
        i_max = default_i_max(lam, k)
    if i_max < k + 10:
        raise ValueError(f"i_max must be >= k + 10, got i_max={i_max}, k={k}")
    closed = _closed_form_values(lam, k, i_max)
    recursion, _, _ = _recursion_values(lam, k, i_max)
    ok, detail = _routes_agree(closed, recursion)
    if not ok:
        raise SteinConsistencyError(
            f"solution routes disagree at lam={lam}, k={k}, i_max={i_max}: {detail}"
        )
    return SteinSolution(lam=lam, k=k, i_max=i_max, f=tuple(closed))


def _rel_close(a: float, b: float, rtol: float = ROUTE_RTOL) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-290)


def verify_solution_properties(lam: float, k: int, i_max: int | None = None) -> SolutionReport:
    """Check sign pattern, monotonicity and sup-norm identities of the solution.

    Differences are taken on the extended-precision recursion values so the
    sign and monotonicity verdicts are not limited by double rounding.  At
    k = 1 the left boundary uses the virtual value f(0) = 0 matching the
    F(-1) = 0 convention of the closed-form constants; the stated f(0) = f(1)
    convention would make the left first-difference trivially zero there.
    """
    lam, k = _validate_threshold(lam, k)
    if i_max is None:
        i_max = default_i_max(lam, k)
    if i_max < k + 10:
        raise ValueError(f"i_max must be >= k + 10, got i_max={i_max}, k={k}")

    closed = _closed_form_values(lam, k, i_max)
    recursion, sf_k_mp, _ = _recursion_values(lam, k, i_max)
    agree, agree_detail = _routes_agree(closed, recursion)

    f = list(recursion)
    f[0] = mp.mpf(0) if k == 1 else f[1]
    delta = [f[i + 1] - f[i] for i in range(i_max)]
    delta2 = [delta[i + 1] - delta[i] for i in range(i_max - 1)]
    sf_k = float(sf_k_mp)

    checks: list[PropertyCheck] = []
    checks.append(PropertyCheck("routes_agree", agree, agree_detail))

    below = delta[:k]  # indices 0..k-1
    above = delta[k:]  # indices k..i_max-1
    sign_below = all(d <= 0 for d in below) and all(d < 0 for d in below[1:])
    if k == 1:
        sign_below = below[0] < 0
    checks.append(PropertyCheck("delta_negative_below_k", sign_below))
    checks.append(PropertyCheck("delta_positive_from_k", all(d > 0 for d in above)))
    checks.append(
        PropertyCheck(
            "delta_decreasing_below_k",
            all(below[i + 1] <= below[i] for i in range(len(below) - 1)),
        )
    )
    checks.append(
        PropertyCheck(
            "delta_decreasing_from_k",
            all(above[i + 1] < above[i] for i in range(len(above) - 1)),
        )
    )

    factors = stein_factors(lam, k)
    norm_f = float(max(abs(v) for v in f))
    norm_delta_below = float(max(abs(d) for d in below))
    norm_delta_above = float(max(abs(d) for d in above))
    norm_delta = max(norm_delta_below, norm_delta_above)
    norm_delta2 = float(max(abs(d) for d in delta2))

    for name, observed, constant in (
        ("norm_f", norm_f, factors.c0),
        ("norm_delta_below_k", norm_delta_below, factors.c1_minus),
        ("norm_delta_from_k", norm_delta_above, factors.c1_plus),
        ("norm_delta", norm_delta, factors.c1),
        ("norm_delta2", norm_delta2, factors.c2),
    ):
        expected = constant * sf_k
        checks.append(
            PropertyCheck(
                name,
                _rel_close(observed, expected),
                f"observed {observed:.12e} vs constant*tail {expected:.12e}",
            )
        )
    checks.append(
        PropertyCheck(
            "f_min_at_k",
            _rel_close(float(abs(f[k])), norm_f) and all(v <= 0 for v in f),
        )
    )
    checks.append(
        PropertyCheck(
            "delta2_positive_only_at_km1",
            delta2[k - 1] > 0
            and all(d <= 0 for i, d in enumerate(delta2) if i != k - 1),
        )
    )
    return SolutionReport(lam=lam, k=k, i_max=i_max, checks=tuple(checks))


def conjecture_scan(lambdas, k_max_offset: int) -> list[GapScanRow]:
    """Tabulate the c1_minus - c1_plus gap over k = floor(lam)+1 .. floor(lam)+offset.

    Reporting only: emits the gap and its log, flagging non-positive gaps;
    no growth rate is asserted.
    """
    if k_max_offset < 1:
        raise ValueError(f"k_max_offset must be >= 1, got {k_max_offset}")
    rows: list[GapScanRow] = []
    for lam in lambdas:
        lam = float(lam)
        base = math.floor(lam)
        for k in range(base + 1, base + k_max_offset + 1):
            fs = stein_factors(lam, k)
            gap = fs.c1_minus - fs.c1_plus
            rows.append(
                GapScanRow(
                    lam=lam,
                    k=k,
                    gap=gap,
                    log_gap=math.log(gap) if gap > 0 else math.nan,
                    gap_positive=gap > 0,
                )
            )
    return rows
