"""Row producers behind the CLI subcommands.

Every function here is deterministic given its arguments (Monte Carlo cases
included, via the counter-based sampler), returning plain dicts ready for CSV
serialization.  Degenerate cases -- an exact tail of zero, or a case outside
a bound's preconditions -- are emitted with a flag, never dropped.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import bounds as bd
from .distributions import (
    AccuracyError,
    AppModel,
    Birthday,
    DistributionTable,
    Matching,
    Occupancy,
    PoissonBinomial,
    Records,
    Triangles,
    TwoRuns,
    birthday_mu,
    exact_table,
    occupancy_params,
    poisson_binomial_params,
    poisson_binomial_table,
    records_params,
    records_success_probs,
    triangles_params,
    two_runs_params,
)
from .logtails import log_normal_sf, log_poisson_sf
from .sampling import monte_carlo_tail
from .stein import conjecture_scan, stein_factors

#: Numerical slack allowed on top of any bound-validity comparison.
VALIDITY_SLACK = 1e-10

#: Default n grid of the record-count ratio curves (log-spaced over [3, 1e5]).
RECORDS_N_GRID = (3, 5, 10, 30, 100, 300, 1_000, 3_000, 10_000, 30_000, 100_000)

#: Default n grid of the binomial adjusted-ratio check.
EXAMPLE2_N_GRID = (10, 30, 100, 300, 1_000, 3_000, 10_000)

VALIDATE_APPS = (
    "matching",
    "occupancy",
    "birthday",
    "triangles",
    "two-runs",
    "poisson-binomial",
    "records",
)


def _poisson_tail(lam: float, k: int) -> float:
    return math.exp(log_poisson_sf(lam, k))


def records_figure_rows(
    n_grid: Sequence[int] = RECORDS_N_GRID, x: float = 3.0
) -> list[dict]:
    """Exact record-count tails against the four comparator tails.

    The threshold for integer-valued laws is k = ceil(v); the uncorrected
    normal comparator is evaluated at v itself, the corrected one at k - 0.5.
    Raises ``AccuracyError`` when the tail cannot be pinned to 1e-12 relative.
    """
    rows = []
    for n in n_grid:
        n = int(n)
        if not 3 <= n <= 100_000:
            raise ValueError(f"record ratio curves need 3 <= n <= 1e5, got {n}")
        m = records_params(n)
        sigma = math.sqrt(m.sigma2)
        v = m.mu + x * sigma
        k = math.ceil(v)
        table = poisson_binomial_table(records_success_probs(n), target_k=k)
        lo, hi = table.tail_bracket(k)
        row = {
            "n": n,
            "lambda_n": m.mu,
            "sigma2_n": m.sigma2,
            "v_n": v,
            "k": k,
            "exact_lo": lo,
            "exact_hi": hi,
        }
        if lo <= 0.0:
            row.update(
                ratio_pn_lambda=math.nan,
                ratio_normal=math.nan,
                ratio_normal_corrected=math.nan,
                ratio_pn_sigma2=math.nan,
                flag="degenerate",
            )
        else:
            if table.truncated_mass > 1e-12 * lo:
                raise AccuracyError(
                    f"records n={n}: truncated mass {table.truncated_mass:.3e} exceeds "
                    f"1e-12 of the tail {lo:.6e} at k={k}"
                )
            row.update(
                ratio_pn_lambda=lo / _poisson_tail(m.mu, k),
                ratio_normal=lo / math.exp(log_normal_sf(m.mu, sigma, v)),
                ratio_normal_corrected=lo / math.exp(log_normal_sf(m.mu, sigma, k - 0.5)),
                ratio_pn_sigma2=lo / _poisson_tail(m.sigma2, k),
                flag="ok",
            )
        rows.append(row)
    return rows


def figure5_rows(
    lam: float = 10.0, k_min: int = 11, k_max: int = 43
) -> tuple[list[dict], bool]:
    """Stein factors against the naive factor over one threshold range.

    Returns the rows and whether both ratios stayed below 1 everywhere.
    """
    if k_min <= lam:
        raise ValueError(f"k range must start above lam (k_min={k_min}, lam={lam})")
    rows = []
    all_below_one = True
    for k in range(k_min, k_max + 1):
        f = stein_factors(lam, k)
        ratio1 = f.c1 / f.naive
        ratio2 = f.c2 / f.naive
        all_below_one &= ratio1 < 1.0 and ratio2 < 1.0
        rows.append(
            {
                "k": k,
                "c1": f.c1,
                "c2": f.c2,
                "naive": f.naive,
                "ratio1": ratio1,
                "ratio2": ratio2,
            }
        )
    return rows, all_below_one


def example2_rows(
    n_grid: Sequence[int] = EXAMPLE2_N_GRID, p: float = 0.3, x: float = 2.0
) -> list[dict]:
    """Binomial right tails against three Poisson comparators.

    Column one fixes the threshold and mean (its limit is the constant
    normal-tail ratio, also emitted); the other two re-standardize the
    threshold so the limit becomes 1.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"binomial success probability must lie in (0,1), got {p}")
    if x <= 0.0:
        raise ValueError(f"need x > 0, got {x}")
    limit = math.exp(log_normal_sf(0, 1, x) - log_normal_sf(0, 1, x * math.sqrt(1.0 - p)))
    rows = []
    for n in n_grid:
        n = int(n)
        mu = n * p
        var = n * p * (1.0 - p)
        k = math.ceil(mu + x * math.sqrt(var))
        k_adjusted = math.ceil(mu + x * math.sqrt(mu))
        k_variance = math.ceil(var + x * math.sqrt(var))
        table = poisson_binomial_table([p] * n, target_k=min(k, n))
        lo, hi = table.tail_bracket(k)
        row = {
            "n": n,
            "k": k,
            "k_adjusted": k_adjusted,
            "k_variance": k_variance,
            "exact_lo": lo,
            "exact_hi": hi,
            "limit_ratio_pn_mean": limit,
        }
        if lo <= 0.0:
            row.update(
                ratio_pn_mean=math.nan,
                ratio_pn_mean_adjusted=math.nan,
                ratio_pn_variance=math.nan,
                flag="degenerate",
            )
        else:
            row.update(
                ratio_pn_mean=lo / _poisson_tail(mu, k),
                ratio_pn_mean_adjusted=lo / _poisson_tail(mu, k_adjusted),
                ratio_pn_variance=lo / _poisson_tail(var, k_variance),
                flag="ok",
            )
        rows.append(row)
    return rows


def conjecture_rows(lambdas: Sequence[float] = (1.0, 5.0, 10.0), k_max_offset: int = 30) -> list[dict]:
    return [
        {
            "lambda": r.lam,
            "k": r.k,
            "gap": r.gap,
            "log_gap": r.log_gap,
            "gap_positive": r.gap_positive,
        }
        for r in conjecture_scan(lambdas, k_max_offset)
    ]


def stein_factor_rows(lam: float, k: int) -> list[dict]:
    f = stein_factors(lam, k)
    return [
        {
            "lambda": f.lam,
            "k": f.k,
            "c0": f.c0,
            "c1_minus": f.c1_minus,
            "c1_plus": f.c1_plus,
            "c1": f.c1,
            "c2": f.c2,
            "naive": f.naive,
        }
    ]


# ---------------------------------------------------------------------------
# Bound-validity sweeps
# ---------------------------------------------------------------------------


def _thresholds_above(lam: float, support_max: int | None, count: int = 4) -> list[int]:
    """Threshold grid strictly above lam: the first few integers plus a 3-sd point."""
    base = math.floor(lam) + 1
    ks = list(range(base, base + count))
    ks.append(math.ceil(lam + 3.0 * math.sqrt(lam)))
    if support_max is not None:
        ks = [k for k in ks if k <= support_max + 2]
    return sorted(set(k for k in ks if k >= 1))


_TERM_COLUMNS = {
    "main_c2_term": "term_main_c2",
    "c1_lambda_sigma_term": "term_c1_lambda_sigma",
    "c1_mu_term": "term_c1_mu",
    "left_tail_term": "term_left_tail",
}


def _term_fields(terms: dict[str, float] | None) -> dict[str, float]:
    terms = terms or {}
    return {column: terms.get(name, 0.0) for name, column in _TERM_COLUMNS.items()}


def _exact_case(
    case: str,
    model: AppModel,
    table: DistributionTable,
    a: int,
    k: int,
    lam: float,
    bound_total: float,
    kind: str,
    bracket: bool = False,
    terms: dict[str, float] | None = None,
) -> dict:
    pn_tail = _poisson_tail(lam, k)
    lo, hi = table.tail_bracket(k + a)
    ratio_lo = lo / pn_tail
    ratio_hi = hi / pn_tail
    deviation = max(abs(ratio_lo - 1.0), abs(ratio_hi - 1.0))
    allow = bound_total + VALIDITY_SLACK * max(1.0, bound_total)
    if bracket:
        ok = (1.0 - ratio_lo) <= allow and (ratio_hi - 1.0) <= VALIDITY_SLACK
    else:
        ok = deviation <= allow
    return {
        "case": case,
        "kind": kind,
        "method": "exact",
        "a": a,
        "k": k,
        "lambda": lam,
        "exact_lo": lo,
        "exact_hi": hi,
        "mc_stderr": 0.0,
        "pn_tail": pn_tail,
        "ratio": ratio_lo,
        "abs_ratio_minus_1": deviation,
        "bound_total": bound_total,
        **_term_fields(terms),
        "status": "pass" if ok else "fail",
    }


def _mc_case(
    case: str,
    model: AppModel,
    a: int,
    k: int,
    lam: float,
    bound_total: float,
    kind: str,
    samples: int,
    seed: int,
    terms: dict[str, float] | None = None,
) -> dict:
    est = monte_carlo_tail(model, a, k, samples, seed)
    pn_tail = _poisson_tail(lam, k)
    ratio = est.p_hat / pn_tail
    stderr_ratio = est.stderr / pn_tail
    deviation = abs(ratio - 1.0)
    allow = bound_total + 4.0 * stderr_ratio + VALIDITY_SLACK * max(1.0, bound_total)
    return {
        "case": case,
        "kind": kind,
        "method": "mc",
        "a": a,
        "k": k,
        "lambda": lam,
        "exact_lo": est.p_hat,
        "exact_hi": est.p_hat,
        "mc_stderr": est.stderr,
        "pn_tail": pn_tail,
        "ratio": ratio,
        "abs_ratio_minus_1": deviation,
        "bound_total": bound_total,
        **_term_fields(terms),
        "status": "pass" if deviation <= allow else "fail",
    }


def _validate_matching(n_values: Sequence[int]) -> list[dict]:
    rows = []
    for n in n_values:
        table = exact_table(Matching(n))
        for k in range(2, 7):
            bound = bd.matching_bound(n, k)
            rows.append(
                _exact_case(
                    f"n={n}", Matching(n), table, 0, k, 1.0, bound, "a0",
                    terms={"c1_mu_term": bound},
                )
            )
    return rows


def _validate_occupancy(n_values: Sequence[int]) -> list[dict]:
    rows = []
    for n in n_values:
        for l in range(1, 9):
            model = Occupancy(n, l)
            table = exact_table(model)
            mu = occupancy_params(n, l).mu
            for k in _thresholds_above(mu, table.support_max):
                bound = bd.occupancy_bound(n, l, k)
                rows.append(
                    _exact_case(
                        f"n={n} l={l}", model, table, 0, k, mu, bound, "a0",
                        terms={"c1_mu_term": bound},
                    )
                )
    return rows


def _validate_birthday(pairs: Sequence[tuple[int, int]]) -> list[dict]:
    rows = []
    for n, l in pairs:
        model = Birthday(n, l)
        table = exact_table(model)
        mu = birthday_mu(n, l)
        for k in _thresholds_above(mu, table.support_max):
            bound = bd.birthday_bound(n, l, k)
            rows.append(
                _exact_case(
                    f"n={n} l={l}", model, table, 0, k, mu, bound, "a0",
                    terms={"c1_mu_term": bound},
                )
            )
    return rows


def _validate_triangles(samples: int, seed: int) -> list[dict]:
    rows = []
    for n in (3, 4, 5, 6):
        for p in (0.1, 0.3, 0.5):
            model = Triangles(n, p)
            table = exact_table(model)
            mu = triangles_params(n, p).mu
            for k in _thresholds_above(mu, table.support_max, count=3):
                bound = bd.triangles_bound(n, p, k)
                rows.append(
                    _exact_case(
                        f"n={n} p={p}", model, table, 0, k, mu, bound, "a0",
                        terms={"c1_mu_term": bound},
                    )
                )
    for n in (8, 10):
        p = 0.1
        mu = triangles_params(n, p).mu
        for k in (1, 2, 3):
            bound = bd.triangles_bound(n, p, k)
            rows.append(
                _mc_case(
                    f"n={n} p={p}", Triangles(n, p), 0, k, mu, bound, "a0",
                    samples, seed, terms={"c1_mu_term": bound},
                )
            )
    return rows


def _validate_two_runs(n_values: Sequence[int]) -> list[dict]:
    rows = []
    for n in n_values:
        for p in (0.1, 0.2, 0.3):
            model = TwoRuns(n, p)
            table = exact_table(model)
            m = two_runs_params(n, p)
            for k in _thresholds_above(m.mu, table.support_max, count=3):
                bound = bd.two_runs_bound(n, p, k)
                rows.append(
                    _exact_case(
                        f"n={n} p={p}", model, table, 0, k, m.mu, bound, "a0",
                        terms={"c1_mu_term": bound},
                    )
                )
            a = bd.two_runs_shift(n, p)
            lam = m.mu - a
            for k in _thresholds_above(lam, table.support_max - a, count=3):
                breakdown = bd.two_runs_bound_shifted(n, p, k)
                rows.append(
                    _exact_case(
                        f"n={n} p={p}", model, table, a, k, lam,
                        breakdown.total, "shifted", terms=breakdown.terms,
                    )
                )
    return rows


def _validate_poisson_binomial(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    rows = []
    for n in (5, 20, 100):
        p = tuple(rng.uniform(0.05, 0.9, n).tolist())
        model = PoissonBinomial(p)
        m = poisson_binomial_params(p)
        table = exact_table(model)
        for k in _thresholds_above(m.mu, table.support_max, count=3):
            breakdown = bd.poisson_binomial_bound(p, k)
            rows.append(
                _exact_case(
                    f"n={n}", model, table, 0, k, m.mu,
                    breakdown.total, "a0", terms=breakdown.terms,
                )
            )
        a = math.floor(m.mu2)
        lam = m.mu - a
        for k in _thresholds_above(lam, table.support_max - a, count=3):
            breakdown = bd.poisson_binomial_shifted_bound(p, k)
            rows.append(
                _exact_case(
                    f"n={n}", model, table, a, k, lam,
                    breakdown.total, "shifted", terms=breakdown.terms,
                )
            )
    return rows


def _validate_records(n_values: Sequence[int]) -> list[dict]:
    rows = []
    for n in n_values:
        m = records_params(n)
        model = Records(n)
        for x in (1.0, 2.0, 3.0):
            k = math.ceil(m.mu + x * math.sqrt(m.mu))
            table = exact_table(model, target_k=k)
            rows.append(
                _exact_case(
                    f"n={n} x={x}", model, table, 0, k, m.mu,
                    bd.records_bound(n, k), "bracket", bracket=True,
                )
            )
    return rows


def validation_rows(
    app: str, seed: int = 0, samples: int = 10_000_000, n_values: Sequence[int] | None = None
) -> tuple[list[dict], int]:
    """Bound-validity sweep for one application; returns (rows, failure count)."""
    if app == "matching":
        rows = _validate_matching(n_values or range(5, 13))
    elif app == "occupancy":
        rows = _validate_occupancy(n_values or range(2, 7))
    elif app == "birthday":
        rows = _validate_birthday([(2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (10, 6)])
    elif app == "triangles":
        rows = _validate_triangles(samples, seed)
    elif app == "two-runs":
        rows = _validate_two_runs(n_values or (20, 50, 100))
    elif app == "poisson-binomial":
        rows = _validate_poisson_binomial(seed)
    elif app == "records":
        rows = _validate_records(n_values or (100, 1000))
    else:
        raise ValueError(f"unknown validation app {app!r}; choose from {VALIDATE_APPS}")
    failures = sum(1 for r in rows if r["status"] == "fail")
    return rows, failures
