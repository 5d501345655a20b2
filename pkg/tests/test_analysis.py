import unittest
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / 'src'))

from analysis import (BoundInputs, CompensatedSum, LedgerError, QuadraticTerms, RegretLedger, ThresholdViolation,
                      alpha_bandit, alpha_weakly_smooth, average_regret_series, bandit_error_sums,
                      bound_bandit, bound_lipschitz, bound_lipschitz_exact, bound_weakly_smooth,
                      cumulative_errors, double_sum_bound, dynamic_regret, lipschitz_optimal_bound,
                      path_variation, quadratic_bound, smoothed_gap_series, with_threshold)
from dogd import step_size_lipschitz_optimal


def random_inputs(rng, **fixed):
    values = dict(
        radius=float(rng.uniform(0.5, 5)), kappa=float(rng.uniform(0.05, 1)), delay=int(rng.integers(1, 10)),
        horizon=int(rng.integers(1, 5000)), eta=float(rng.uniform(1e-4, 1e-1)),
        lipschitz=float(rng.uniform(0.1, 5)), path_variation=float(rng.uniform(0, 10)),
        delta_sum=float(rng.uniform(0, 3)), lambda_sum=float(rng.uniform(0, 3)),
    )
    values.update(fixed)
    return BoundInputs(**values)


class TestRegretLedger(unittest.TestCase):
    """Per-round regret accounting"""

    def test_zero_regret(self):
        """x_t = x*_t every round gives 0"""
        ledger = RegretLedger()
        for v in (1.0, 0.5, 2.0):
            ledger.record(v, v)
        self.assertEqual(dynamic_regret(ledger), 0.0)

    def test_single_round(self):
        """One round with gap 2.5 gives 2.5"""
        ledger = RegretLedger()
        ledger.record(3.0, 0.5)
        self.assertEqual(dynamic_regret(ledger), 2.5)
        np.testing.assert_array_equal(ledger.cumulative_regret(), [2.5])

    def test_compensated_matches_naive(self):
        """Running compensated sum, fsum and naive summation agree to 1e-10 relative"""
        rng = np.random.default_rng(0)
        ledger = RegretLedger()
        f = rng.uniform(0, 10, 5000)
        g = f - rng.uniform(0, 1, 5000)
        for a, b in zip(f, g):
            ledger.record(a, b)
        naive = float(np.sum(f - g))
        self.assertAlmostEqual(dynamic_regret(ledger) / naive, 1.0, delta=1e-10)
        self.assertAlmostEqual(ledger.cumulative_regret()[-1] / naive, 1.0, delta=1e-10)
        self.assertTrue(np.all(np.diff(ledger.cumulative_regret()) >= 0))

    def test_missing_minimizer(self):
        """Rounds without f_t(x*_t) make the regret undefined"""
        ledger = RegretLedger()
        ledger.record(1.0, 0.0)
        ledger.record(1.0)
        ledger.record(1.0, 0.0)
        with self.assertRaises(LedgerError):
            dynamic_regret(ledger)
        with self.assertRaises(LedgerError):
            ledger.gaps()
        self.assertTrue(math.isnan(ledger.cumulative_regret()[-1]))

    def test_path_and_queries(self):
        """Minimizer path and query counts accumulate"""
        ledger = RegretLedger()
        for x, q in (([0.0, 0.0], 3), ([3.0, 4.0], 3), ([3.0, 4.0], 3)):
            ledger.record(1.0, 0.0, np.array(x), 0.5, q)
        self.assertEqual(ledger.path_variation, 5.0)
        self.assertEqual(ledger.total_queries, 9)
        self.assertEqual(ledger.error_sums, (1.5, 0.75))

    def test_unknown_error_bound(self):
        """Any unknown error bound makes the error sums unknown"""
        ledger = RegretLedger()
        ledger.record(1.0, 0.0, error_bound=0.1)
        ledger.record(1.0, 0.0, error_bound=None)
        self.assertIsNone(ledger.error_sums)

    def test_frame(self):
        """Per-round frame carries every series"""
        ledger = RegretLedger()
        ledger.record(2.0, 1.0)
        ledger.record(1.5, 1.0)
        frame = ledger.to_frame()
        self.assertEqual(list(frame['t']), [1, 2])
        self.assertEqual(list(frame['gap']), [1.0, 0.5])
        self.assertEqual(list(frame['regret_cum']), [1.0, 1.5])


class TestSums(unittest.TestCase):
    """Path variation and error sums"""

    def test_path_variation(self):
        """Constant path 0; two points at distance 3 give 3; random walk matches direct summation"""
        self.assertEqual(path_variation([[1.0, 1.0]] * 5), 0.0)
        self.assertEqual(path_variation([[0.0, 0.0], [3.0, 0.0]]), 3.0)
        self.assertEqual(path_variation([[0.5, 0.5]]), 0.0)
        walk = np.cumsum(np.random.default_rng(1).standard_normal((500, 3)), axis=0)
        direct = sum(np.linalg.norm(walk[i] - walk[i + 1]) for i in range(499))
        self.assertAlmostEqual(path_variation(walk), direct, delta=1e-12 * direct)

    def test_cumulative_errors(self):
        """Zeros give (0, 0); (1, 2) gives (3, 5)"""
        self.assertEqual(cumulative_errors([0.0, 0.0]), (0.0, 0.0))
        self.assertEqual(cumulative_errors([1.0, 2.0]), (3.0, 5.0))
        with self.assertRaises(LedgerError):
            cumulative_errors([1.0, -1.0])

    def test_bandit_sums(self):
        """h_t = 1/t, p = 4, G = 2 matches direct summation"""
        h = [1.0 / t for t in range(1, 1001)]
        delta_bar, lambda_bar = bandit_error_sums(h, 4, 2.0)
        self.assertAlmostEqual(delta_bar, 2.0 * 2.0 / 2.0 * sum(h), places=10)
        self.assertAlmostEqual(lambda_bar, 4 * 4.0 / 4.0 * sum(v * v for v in h), places=10)

    def test_compensated_sum(self):
        """Cancellation that loses plain float summation is kept"""
        total = CompensatedSum()
        for v in (1e16, 1.0, -1e16):
            total.add(v)
        self.assertEqual(total.value, 1.0)

    def test_series(self):
        """Average regret R_t / t and the trailing-window gap mean"""
        np.testing.assert_array_equal(average_regret_series([2.0, 4.0, 6.0]), [2.0, 2.0, 2.0])
        np.testing.assert_allclose(smoothed_gap_series([1.0, 3.0, 5.0], window=2), [1.0, 2.0, 4.0])


class TestLipschitzBounds(unittest.TestCase):
    """Bounds for Lipschitz losses"""

    def test_worked_example(self):
        """R = eta = kappa = L = d = T = 1 and no drift or errors gives 2.5"""
        inputs = BoundInputs(radius=1.0, kappa=1.0, delay=1, horizon=1, eta=1.0, lipschitz=1.0)
        self.assertEqual(bound_lipschitz(inputs), 2.5)

    def test_delay_free_form(self):
        """d = 1 with exact gradients reduces to the standard dynamic-regret form"""
        rng = np.random.default_rng(2)
        for _ in range(200):
            b = random_inputs(rng, delay=1, delta_sum=0.0, lambda_sum=0.0)
            R, k, eta, L, T, V = b.radius, b.kappa, b.eta, b.lipschitz, b.horizon, b.path_variation
            expected = 2 * R * R / (eta * k) + 3 * R * V / (eta * k) + eta * L * L * T / (2 * k)
            self.assertAlmostEqual(bound_lipschitz(b) / expected, 1.0, delta=1e-12)

    def test_exact_gradient_forms_agree(self):
        """The five-term bound without errors equals the exact-gradient form"""
        rng = np.random.default_rng(3)
        for _ in range(200):
            b = random_inputs(rng, delta_sum=0.0, lambda_sum=0.0)
            self.assertAlmostEqual(bound_lipschitz(b) / bound_lipschitz_exact(b), 1.0, delta=1e-12)

    def test_monotone_in_delay(self):
        """Doubling d increases the bound"""
        rng = np.random.default_rng(4)
        for _ in range(50):
            b = random_inputs(rng)
            self.assertGreater(bound_lipschitz(replace(b, delay=2 * b.delay)), bound_lipschitz(b))

    def test_optimal_step(self):
        """At the optimal step-size the exact-gradient bound equals its closed-form minimum"""
        rng = np.random.default_rng(5)
        for _ in range(50):
            b = random_inputs(rng, delta_sum=0.0, lambda_sum=0.0)
            eta = step_size_lipschitz_optimal(b.radius, b.lipschitz, b.horizon, b.delay, b.path_variation)
            at_optimum = bound_lipschitz_exact(replace(b, eta=eta))
            closed = lipschitz_optimal_bound(b.radius, b.lipschitz, b.horizon, b.delay, b.path_variation, b.kappa)
            self.assertAlmostEqual(at_optimum / closed, 1.0, delta=1e-12)
            self.assertLessEqual(closed, bound_lipschitz_exact(replace(b, eta=1.1 * eta)))

    def test_rejects_bad_inputs(self):
        """Non-positive eta and missing L are rejected"""
        inputs = BoundInputs(radius=1.0, kappa=1.0, delay=1, horizon=1, eta=0.0, lipschitz=1.0)
        with self.assertRaises(ThresholdViolation):
            bound_lipschitz(inputs)
        with self.assertRaises(LedgerError):
            bound_lipschitz(replace(inputs, eta=1.0, lipschitz=None))


class TestWeaklySmoothBounds(unittest.TestCase):
    """Quadratic-solution bounds"""

    def test_quadratic_examples(self):
        """(a, b, c) = (1, 0, 1) gives 1; (1, 2, 0) gives 4"""
        self.assertEqual(quadratic_bound(QuadraticTerms(1.0, 0.0, 1.0)), 1.0)
        self.assertEqual(quadratic_bound(QuadraticTerms(1.0, 2.0, 0.0)), 4.0)

    def test_square_of_root(self):
        """Equals ((b + sqrt(b^2 + 4ac)) / 2a)^2"""
        rng = np.random.default_rng(6)
        for _ in range(500):
            a, b, c = rng.uniform(0.01, 1), rng.uniform(0, 10), rng.uniform(0, 10)
            root = (b + math.sqrt(b * b + 4 * a * c)) / (2 * a)
            self.assertAlmostEqual(quadratic_bound(QuadraticTerms(a, b, c)) / root ** 2, 1.0, delta=1e-12)

    def test_delay_free_reduction(self):
        """d = 1 without errors gives (2R^2 + 3RV) / ((1 - alpha eta) kappa)"""
        rng = np.random.default_rng(7)
        for _ in range(1000):
            kappa, gamma = float(rng.uniform(0.05, 1)), float(rng.uniform(0.1, 10))
            alpha = alpha_weakly_smooth(kappa, gamma, 1)
            eta = float(rng.uniform(0.01, 0.99)) / alpha
            b = BoundInputs(radius=float(rng.uniform(0.5, 5)), kappa=kappa, delay=1, horizon=1000, eta=eta,
                            weak_smoothness=gamma, path_variation=float(rng.uniform(0, 10)), alpha=alpha)
            bound, terms = bound_weakly_smooth(b)
            R, V = b.radius, b.path_variation
            expected = (2 * R * R + 3 * R * V) / ((1 - alpha * eta) * kappa)
            self.assertEqual(terms.b, 0.0)
            self.assertAlmostEqual(bound / expected, 1.0, delta=1e-12)

    def test_threshold_violation(self):
        """eta above 1/alpha is rejected"""
        b = BoundInputs(radius=1.0, kappa=0.5, delay=2, horizon=10, eta=1.0, weak_smoothness=1.0)
        b = with_threshold(b, 4)
        with self.assertRaises(ThresholdViolation):
            bound_weakly_smooth(replace(b, eta=2.0 / b.alpha))
        bound_weakly_smooth(replace(b, eta=0.5 / b.alpha))

    def test_threshold_coefficients(self):
        """alpha uses d + c sqrt(d)(d - 1) with c = 4 or 2"""
        self.assertAlmostEqual(alpha_weakly_smooth(0.5, 2.0, 4, 4), (4 + 4 * 2 * 3) * 2.0 / 1.0)
        self.assertAlmostEqual(alpha_weakly_smooth(0.5, 2.0, 4, 2), (4 + 2 * 2 * 3) * 2.0 / 1.0)
        self.assertEqual(alpha_weakly_smooth(1.0, 8.0, 1), 4.0)
        self.assertAlmostEqual(alpha_bandit(0.5, 1.0, 4), (4 + 4 * 2 * 3) * 1.0 / 0.5)


class TestBanditBound(unittest.TestCase):
    """Zeroth-order bound"""

    def setUp(self):
        self.base = BoundInputs(radius=2.0, kappa=0.5, delay=3, horizon=100, eta=1e-3, smoothness=1.5,
                                path_variation=0.7, dim=4, alpha=alpha_bandit(0.5, 1.5, 3))

    def test_zero_steps_reduce(self):
        """h = 0 coincides with the weakly smooth bound at Gamma = 2G without errors"""
        bandit, _ = bound_bandit(replace(self.base, h=(0.0,) * 100))
        smooth, _ = bound_weakly_smooth(replace(self.base, weak_smoothness=3.0))
        self.assertAlmostEqual(bandit / smooth, 1.0, delta=1e-14)

    def test_delay_free_static(self):
        """d = 1, h = 0, V = 0 gives 2R^2 / ((1 - alpha eta) kappa)"""
        alpha = alpha_bandit(0.5, 1.5, 1)
        b = replace(self.base, delay=1, path_variation=0.0, alpha=alpha, h=(0.0,) * 100)
        bound, _ = bound_bandit(b)
        self.assertAlmostEqual(bound / (2 * 4.0 / ((1 - alpha * 1e-3) * 0.5)), 1.0, delta=1e-12)

    def test_monotone_in_steps(self):
        """Larger h_t gives a larger bound"""
        h = tuple(1.0 / t for t in range(1, 101))
        small, _ = bound_bandit(replace(self.base, h=h))
        large, _ = bound_bandit(replace(self.base, h=tuple(2 * v for v in h)))
        self.assertGreater(large, small)

    def test_missing_schedule(self):
        """The h schedule is required"""
        with self.assertRaises(LedgerError):
            bound_bandit(self.base)


class TestDoubleSum(unittest.TestCase):
    """Reordering of the delayed-feedback double sum"""

    def test_brute_force(self):
        """Both summation orders agree and respect (d - 1) sum a_k for T <= 30, d <= 6"""
        rng = np.random.default_rng(8)
        for _ in range(100):
            a = rng.uniform(0, 1, int(rng.integers(1, 31)))
            for d in range(1, 7):
                result = double_sum_bound(a, d)
                self.assertEqual(result.by_round, result.by_origin)
                self.assertLessEqual(result.by_round, result.bound + 1e-12)

    def test_no_delay(self):
        """d = 1 gives empty sums"""
        self.assertEqual(double_sum_bound([1.0, 2.0, 3.0], 1), (0.0, 0.0, 0.0))


if __name__ == '__main__':
    unittest.main()
