"""Tests of the exact distribution tables against independent oracles:
hand calculations, brute-force enumerations, recursions and Monte Carlo."""

import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poismd.distributions import (
    Birthday,
    Matching,
    Occupancy,
    PoissonBinomial,
    Records,
    Triangles,
    TwoRuns,
    birthday_mu,
    birthday_table_small,
    exact_table,
    matching_table,
    occupancy_params,
    occupancy_table,
    poisson_binomial_params,
    poisson_binomial_table,
    records_params,
    records_success_probs,
    triangles_params,
    triangles_table_small,
    two_runs_params,
    two_runs_table,
)
from poismd.sampling import monte_carlo_tail

EULER_GAMMA = float(np.euler_gamma)


def enumerate_bernoulli_sum(p: np.ndarray) -> np.ndarray:
    """Brute-force pmf of a Bernoulli sum over all 2^n outcomes."""
    n = len(p)
    masks = np.arange(1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    log_odds = np.log(p) - np.log1p(-p)
    log_weights = bits @ log_odds + np.log1p(-p).sum()
    w = bits.sum(axis=1).astype(int)
    return np.bincount(w, weights=np.exp(log_weights), minlength=n + 1)


def total_variation(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    size = max(len(a), len(b))
    a = np.pad(a, (0, size - len(a)))
    b = np.pad(b, (0, size - len(b)))
    return 0.5 * float(np.abs(a - b).sum())


class TestPoissonBinomial:
    def test_single_coin(self):
        t = poisson_binomial_table([0.5])
        assert t.pmf(0) == pytest.approx(0.5, abs=1e-15)
        assert t.pmf(1) == pytest.approx(0.5, abs=1e-15)

    def test_hand_convolution_records_n3(self):
        t = poisson_binomial_table([1 / 2, 1 / 3])
        assert t.pmf(0) == pytest.approx(1 / 3, rel=1e-14)
        assert t.pmf(1) == pytest.approx(1 / 2, rel=1e-14)
        assert t.pmf(2) == pytest.approx(1 / 6, rel=1e-14)

    def test_against_full_enumeration_n20(self):
        rng = np.random.default_rng(11)
        p = rng.uniform(0.02, 0.95, 20)
        table = poisson_binomial_table(p)
        assert total_variation(table.pmf_array(), enumerate_bernoulli_sum(p)) <= 1e-12

    def test_domain_error(self):
        with pytest.raises(ValueError):
            poisson_binomial_table([0.5, 1.0])
        with pytest.raises(ValueError):
            poisson_binomial_table([0.0])
        with pytest.raises(ValueError):
            poisson_binomial_table([])

    @given(
        st.lists(st.floats(min_value=0.01, max_value=0.99, allow_nan=False), min_size=1, max_size=12)
    )
    @settings(max_examples=200, deadline=None)
    def test_mass_moments_and_unimodality(self, p):
        table = poisson_binomial_table(p)
        m = poisson_binomial_params(p)
        assert table.total_stored_mass() + table.truncated_mass == pytest.approx(1.0, abs=1e-12)
        assert table.mean() == pytest.approx(m.mu, rel=1e-10, abs=1e-12)
        assert table.variance() == pytest.approx(m.sigma2, rel=1e-10, abs=1e-12)
        assert table.is_unimodal()

    def test_windowed_run_brackets_reference(self):
        # n large enough to trigger the adaptive window
        n = 30_000
        p = records_success_probs(n)
        m = records_params(n)
        k = math.ceil(m.mu + 3.0 * math.sqrt(m.sigma2))
        table = poisson_binomial_table(p, target_k=k)
        lo, hi = table.tail_bracket(k)
        assert table.support_max < n  # truncation actually happened
        assert table.truncated_mass <= 1e-15 * lo
        assert lo > 0.0 and hi >= lo

    @pytest.mark.parametrize("n", [100, 1000])
    def test_records_bracket_contains_50_digit_reference(self, n):
        m = records_params(n)
        k = math.ceil(m.mu + 3.0 * math.sqrt(m.sigma2))
        table = poisson_binomial_table(records_success_probs(n), target_k=k)
        lo, hi = table.tail_bracket(k)
        ref = _records_tail_reference(n, k)
        slack = 1e-12 * ref
        assert lo - slack <= ref <= hi + slack


def _records_tail_reference(n: int, k: int) -> float:
    """50-digit windowed convolution of the record-count law (independent route)."""
    with mp.workdps(50):
        m = records_params(n)
        cap = min(n, int(m.mu + 60.0 * math.sqrt(m.sigma2)) + 5)
        pmf = [mp.mpf(0)] * (cap + 1)
        pmf[0] = mp.mpf(1)
        for i in range(2, n + 1):
            q = mp.mpf(1) / i
            new = [pmf[j] * (1 - q) for j in range(cap + 1)]
            for j in range(cap, 0, -1):
                new[j] += pmf[j - 1] * q
            pmf = new
        return float(mp.fsum(pmf[k:]))


class TestRecordsParams:
    def test_two_observations(self):
        m = records_params(2)
        assert m.mu == pytest.approx(0.5, abs=1e-16)
        assert m.sigma2 == pytest.approx(0.25, abs=1e-16)

    def test_three_observations(self):
        m = records_params(3)
        assert m.mu == pytest.approx(5 / 6, rel=1e-15)
        assert m.sigma2 == pytest.approx(17 / 36, rel=1e-15)

    def test_harmonic_bounds_at_1e5(self):
        m = records_params(100_000)
        assert math.log(100_000) + EULER_GAMMA - 1.0 <= m.mu <= math.log(100_000) + EULER_GAMMA

    def test_domain_error(self):
        with pytest.raises(ValueError):
            records_params(1)


class TestMatching:
    def test_single_point(self):
        t = matching_table(1)
        assert t.pmf(1) == 1.0 and t.pmf(0) == 0.0

    def test_three_points(self):
        t = matching_table(3)
        assert t.pmf(0) == pytest.approx(1 / 3, rel=1e-15)
        assert t.pmf(1) == pytest.approx(1 / 2, rel=1e-15)
        assert t.pmf(2) == 0.0
        assert t.pmf(3) == pytest.approx(1 / 6, rel=1e-15)

    def test_near_top_is_impossible(self):
        for n in (4, 7, 10):
            assert matching_table(n).pmf(n - 1) == 0.0

    def test_against_derangement_recursion_n12(self):
        n = 12
        d = [Fraction(1), Fraction(0)]  # D_0, D_1
        for m in range(2, n + 1):
            d.append((m - 1) * (d[m - 1] + d[m - 2]))
        table = matching_table(n)
        for k in range(n + 1):
            want = Fraction(math.comb(n, k) * d[n - k], math.factorial(n))
            assert table.pmf(k) == pytest.approx(float(want), rel=1e-14, abs=1e-300)


class TestOccupancy:
    def test_two_boxes_two_balls(self):
        t = occupancy_table(2, 2)
        assert t.pmf(0) == pytest.approx(0.5, abs=1e-15)
        assert t.pmf(1) == pytest.approx(0.5, abs=1e-15)
        assert occupancy_params(2, 2).mu == pytest.approx(0.5, rel=1e-15)

    def test_one_ball_leaves_one_empty(self):
        assert occupancy_table(2, 1).pmf(1) == 1.0

    def test_against_full_enumeration_5_7(self):
        n, l = 5, 7
        table = occupancy_table(n, l)
        brute = np.zeros(n + 1)
        assignments = (np.arange(n**l)[:, None] // n ** np.arange(l)) % n
        empties = np.zeros(len(assignments), dtype=np.int64)
        for b in range(n):
            empties += (assignments != b).all(axis=1)
        counts = np.bincount(empties, minlength=n + 1)
        brute = counts / float(n**l)
        assert total_variation(table.pmf_array(), brute) <= 1e-12

    def test_moments_match_table(self):
        for n, l in [(3, 2), (4, 6), (6, 8)]:
            table = occupancy_table(n, l)
            m = occupancy_params(n, l)
            assert table.mean() == pytest.approx(m.mu, rel=1e-12)
            assert table.variance() == pytest.approx(m.sigma2, rel=1e-10, abs=1e-13)


class TestBirthday:
    def test_two_boxes_three_balls(self):
        t = birthday_table_small(2, 3)
        assert t.pmf(1) == pytest.approx(3 / 4, rel=1e-15)
        assert t.pmf(3) == pytest.approx(1 / 4, rel=1e-15)
        assert birthday_mu(2, 3) == pytest.approx(1.5, abs=1e-16)

    def test_two_balls_collide(self):
        t = birthday_table_small(4, 2)
        assert t.pmf(0) == pytest.approx(3 / 4, rel=1e-15)
        assert t.pmf(1) == pytest.approx(1 / 4, rel=1e-15)

    @pytest.mark.parametrize("n,l", [(3, 4), (4, 5), (5, 3)])
    def test_against_direct_enumeration(self, n, l):
        table = birthday_table_small(n, l)
        w_max = math.comb(l, 2)
        brute = np.zeros(w_max + 1)
        for code in range(n**l):
            boxes = [(code // n**i) % n for i in range(l)]
            counts = [boxes.count(b) for b in range(n)]
            w = sum(math.comb(c, 2) for c in counts)
            brute[w] += 1.0
        brute /= float(n**l)
        assert total_variation(table.pmf_array(), brute) <= 1e-13

    def test_matches_monte_carlo(self):
        table = birthday_table_small(3, 4)
        est = monte_carlo_tail(Birthday(3, 4), 0, 2, 10_000_000, 97)
        lo, _ = table.tail_bracket(2)
        assert abs(est.p_hat - lo) <= 4.0 * est.stderr
        assert table.total_stored_mass() == pytest.approx(1.0, abs=1e-12)

    def test_size_guard(self):
        with pytest.raises(ValueError, match="monte_carlo_tail"):
            birthday_table_small(10, 9)


class TestTriangles:
    def test_single_triangle_is_bernoulli(self):
        for p in (0.2, 0.5, 0.8):
            t = triangles_table_small(3, p)
            assert t.pmf(1) == pytest.approx(p**3, rel=1e-13)
            assert t.pmf(0) == pytest.approx(1 - p**3, rel=1e-13)

    def test_mean_on_four_vertices(self):
        t = triangles_table_small(4, 0.5)
        assert t.mean() == pytest.approx(0.5, rel=1e-13)

    def test_moments_against_closed_forms(self):
        t = triangles_table_small(6, 0.3)
        m = triangles_params(6, 0.3)
        assert t.mean() == pytest.approx(m.mu, rel=1e-12)
        assert t.variance() == pytest.approx(m.sigma2, rel=1e-12)

    def test_size_guard(self):
        with pytest.raises(ValueError, match="monte_carlo_tail"):
            triangles_table_small(8, 0.5)


class TestTwoRuns:
    def test_three_positions_closed_form(self):
        p = 0.37
        t = two_runs_table(3, p)
        assert t.pmf(3) == pytest.approx(p**3, rel=1e-13)
        assert t.pmf(2) == 0.0
        assert t.pmf(1) == pytest.approx(3 * p * p * (1 - p), rel=1e-13)
        assert t.pmf(0) == pytest.approx(1 - p**3 - 3 * p * p * (1 - p), rel=1e-13)

    @pytest.mark.parametrize("n,p", [(4, 0.5), (7, 0.23), (11, 0.61)])
    def test_against_full_enumeration(self, n, p):
        brute = np.zeros(n + 1)
        for mask in range(1 << n):
            bits = [(mask >> i) & 1 for i in range(n)]
            w = sum(bits[i] * bits[(i + 1) % n] for i in range(n))
            brute[w] += math.prod(p if b else 1 - p for b in bits)
        assert total_variation(two_runs_table(n, p).pmf_array(), brute) <= 1e-13

    @given(
        st.integers(min_value=3, max_value=40),
        st.floats(min_value=0.05, max_value=0.95, allow_nan=False),
    )
    @settings(max_examples=100, deadline=None)
    def test_mean_is_linear(self, n, p):
        table = two_runs_table(n, p)
        m = two_runs_params(n, p)
        assert table.mean() == pytest.approx(m.mu, rel=1e-12, abs=1e-13)
        assert table.variance() == pytest.approx(m.sigma2, rel=1e-10, abs=1e-12)


class TestMonteCarlo:
    def test_certain_event(self):
        est = monte_carlo_tail(Matching(5), 0, 0, 10_000, 42)
        assert est.p_hat == 1.0
        assert est.stderr == 0.0
        assert est.ci95_low == est.ci95_high == 1.0

    def test_single_triangle_probability(self):
        est = monte_carlo_tail(Triangles(3, 0.5), 0, 1, 200_000, 7)
        assert abs(est.p_hat - 0.125) <= 4.0 * est.stderr

    def test_against_exact_two_runs(self):
        est = monte_carlo_tail(TwoRuns(12, 0.3), 0, 3, 100_000, 11)
        lo, _ = two_runs_table(12, 0.3).tail_bracket(3)
        assert abs(est.p_hat - lo) <= 4.0 * est.stderr

    def test_bit_identical_reproduction(self):
        a = monte_carlo_tail(Occupancy(6, 9), 0, 3, 50_000, 123)
        b = monte_carlo_tail(Occupancy(6, 9), 0, 3, 50_000, 123)
        assert a == b

    def test_seed_changes_stream(self):
        a = monte_carlo_tail(TwoRuns(15, 0.4), 0, 4, 50_000, 1)
        b = monte_carlo_tail(TwoRuns(15, 0.4), 0, 4, 50_000, 2)
        assert a.p_hat != b.p_hat

    def test_sample_floor(self):
        with pytest.raises(ValueError):
            monte_carlo_tail(Matching(4), 0, 1, 9_999, 0)

    def test_records_and_pb_models_sample(self):
        est = monte_carlo_tail(Records(20), 0, 2, 20_000, 5)
        table = exact_table(Records(20))
        lo, _ = table.tail_bracket(2)
        assert abs(est.p_hat - lo) <= 4.0 * max(est.stderr, 1e-6)
        est2 = monte_carlo_tail(PoissonBinomial((0.2, 0.4, 0.6)), 0, 2, 20_000, 5)
        lo2, _ = exact_table(PoissonBinomial((0.2, 0.4, 0.6))).tail_bracket(2)
        assert abs(est2.p_hat - lo2) <= 4.0 * max(est2.stderr, 1e-6)


class TestModelValidation:
    def test_parameter_domains(self):
        with pytest.raises(ValueError):
            Records(1)
        with pytest.raises(ValueError):
            Occupancy(1, 3)
        with pytest.raises(ValueError):
            Triangles(2, 0.5)
        with pytest.raises(ValueError):
            TwoRuns(5, 1.0)
        with pytest.raises(ValueError):
            PoissonBinomial((0.5, 0.0))

    def test_table_csv_serialization(self):
        table = matching_table(4)
        text = table.to_csv({"model": "matching", "n": 4})
        lines = text.split("\r\n")
        assert lines[0] == "# model: model=matching n=4"
        assert lines[1].startswith("# truncated_mass: 0")
        assert lines[2] == "k,pmf,log_pmf"
        k, pmf, log_pmf = lines[3 + 2].split(",")
        assert int(k) == 2 and float(pmf) == 0.25
        assert math.exp(float(log_pmf)) == pytest.approx(0.25, rel=1e-15)
        assert lines[3 + 3].split(",")[2] == "-inf"

    def test_exact_table_dispatch(self):
        assert exact_table(Matching(4)).pmf(4) == pytest.approx(1 / 24, rel=1e-14)
        assert exact_table(Occupancy(2, 1)).pmf(1) == 1.0
        assert exact_table(Birthday(4, 2)).pmf(1) == pytest.approx(0.25, rel=1e-14)
        assert exact_table(Triangles(3, 0.5)).pmf(1) == pytest.approx(0.125, rel=1e-13)
        assert exact_table(TwoRuns(3, 0.5)).pmf(3) == pytest.approx(0.125, rel=1e-13)
        assert exact_table(Records(3)).pmf(2) == pytest.approx(1 / 6, rel=1e-13)
        assert exact_table(PoissonBinomial((0.5,))).pmf(1) == pytest.approx(0.5, rel=1e-15)
