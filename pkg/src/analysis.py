#!/usr/bin/env python3
"""
Regret accounting and closed-form regret bounds.

RegretLedger records f_t(x_t), f_t(x*_t), the minimizers' path and the
feedback error bounds of a run. The bound evaluators are pure functions of a
BoundInputs record: the Lipschitz bound, the weakly smooth quadratic-solution
bound and its bandit counterpart, plus the step-size thresholds they need.
"""

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np
import pandas as pd

# Trailing window of the smoothed instantaneous gap
GAP_WINDOW = 50


class LedgerError(ValueError):
    """A ledger or bound input needed by an evaluator is missing or invalid"""


class ThresholdViolation(ValueError):
    """Step-size at or above the evaluator's threshold (a <= 0) or non-positive"""


class CompensatedSum:
    """Running sum kept as an unevaluated pair (s, t) via the two-sum transformation"""

    def __init__(self, value=0.0):
        self._s = float(value)
        self._t = 0.0

    @staticmethod
    def two_sum(u, v):
        s = u + v
        up = s - v
        vpp = s - up
        return s, -((up - u) + (vpp - v))

    def add(self, y):
        y, u = self.two_sum(float(y), self._t)
        self._s, self._t = self.two_sum(y, self._s)
        if self._s == 0:
            self._s = u
        else:
            self._t += u
        return self

    @property
    def value(self):
        return self._s + self._t


class RegretLedger:
    """Per-round record of a run; regret and path variation are accumulated as rounds arrive"""

    def __init__(self):
        self.iterate_losses = []
        self.minimizer_losses = []
        self.errors = []
        self.queries = []
        self.cumulative = []
        self._regret = CompensatedSum()
        self._variation = CompensatedSum()
        self._last_minimizer = None
        self.minimizers_known = True

    def record(self, loss_at_iterate, loss_at_minimizer=None, minimizer=None,
               error_bound=0.0, query_count=1):
        self.iterate_losses.append(float(loss_at_iterate))
        self.queries.append(int(query_count))
        self.errors.append(None if error_bound is None else float(error_bound))
        if loss_at_minimizer is None:
            self.minimizers_known = False
            self.minimizer_losses.append(None)
            self.cumulative.append(math.nan)
        else:
            self.minimizer_losses.append(float(loss_at_minimizer))
            self._regret.add(loss_at_iterate - loss_at_minimizer)
            self.cumulative.append(self._regret.value if self.minimizers_known else math.nan)
        if minimizer is not None:
            minimizer = np.asarray(minimizer, dtype=float)
            if self._last_minimizer is not None:
                self._variation.add(np.linalg.norm(minimizer - self._last_minimizer))
            self._last_minimizer = minimizer

    @property
    def horizon(self):
        return len(self.iterate_losses)

    @property
    def path_variation(self):
        return self._variation.value

    @property
    def total_queries(self):
        return sum(self.queries)

    @property
    def error_sums(self):
        """(Delta_T, Lambda_T), or None when some round's error bound is unknown"""
        if any(e is None for e in self.errors):
            return None
        return cumulative_errors(self.errors)

    def gaps(self):
        if not self.minimizers_known:
            raise LedgerError("minimizer values missing; instantaneous gaps undefined")
        return np.asarray(self.iterate_losses) - np.asarray(self.minimizer_losses, dtype=float)

    def cumulative_regret(self):
        return np.asarray(self.cumulative, dtype=float)

    def to_frame(self):
        """Full-resolution per-round series"""
        frame = pd.DataFrame({
            't': np.arange(1, self.horizon + 1),
            'loss_iterate': self.iterate_losses,
            'loss_minimizer': np.asarray(self.minimizer_losses, dtype=float),
            'regret_cum': self.cumulative,
            'error_bound': np.asarray(self.errors, dtype=float),
            'queries': self.queries,
        })
        frame['gap'] = frame['loss_iterate'] - frame['loss_minimizer']
        return frame


def dynamic_regret(ledger):
    """sum_t f_t(x_t) - f_t(x*_t), correctly rounded"""
    missing = [t for t, v in enumerate(ledger.minimizer_losses, start=1) if v is None]
    if missing:
        raise LedgerError(f"minimizer value missing for {len(missing)} rounds (first: t={missing[0]})")
    return math.fsum(f - g for f, g in zip(ledger.iterate_losses, ledger.minimizer_losses))


def path_variation(minimizers):
    """V_T = sum_{t<T} ||x*_t - x*_{t+1}||"""
    points = np.asarray(minimizers, dtype=float)
    if len(points) < 2:
        return 0.0
    return math.fsum(np.linalg.norm(np.diff(points, axis=0), axis=1))


def cumulative_errors(deltas):
    """(Delta_T, Lambda_T) = (sum delta_t, sum delta_t^2)"""
    deltas = [float(d) for d in deltas]
    if any(d < 0 for d in deltas):
        raise LedgerError("error bounds must be non-negative")
    return math.fsum(deltas), math.fsum(d * d for d in deltas)


def bandit_error_sums(h, p, smoothness):
    """(Delta-bar, Lambda-bar) = (sqrt(p) G / 2 sum h_t, p G^2 / 4 sum h_t^2)"""
    h = [float(v) for v in h]
    if any(v < 0 for v in h):
        raise LedgerError("difference steps must be non-negative")
    return (math.sqrt(p) * smoothness / 2.0 * math.fsum(h),
            p * smoothness ** 2 / 4.0 * math.fsum(v * v for v in h))


def average_regret_series(cumulative):
    """R_t / t"""
    cumulative = np.asarray(cumulative, dtype=float)
    return cumulative / np.arange(1, cumulative.size + 1)


def smoothed_gap_series(gaps, window=GAP_WINDOW):
    """Trailing mean of f_t(x_t) - f_t(x*_t) over the last `window` rounds"""
    return pd.Series(np.asarray(gaps, dtype=float)).rolling(window, min_periods=1).mean().to_numpy()


# ---------------------------------------------------------------------------
# Bound evaluators

@dataclass(frozen=True)
class BoundInputs:
    radius: float
    kappa: float
    delay: int
    horizon: int
    eta: float
    lipschitz: Optional[float] = None
    weak_smoothness: Optional[float] = None
    smoothness: Optional[float] = None
    path_variation: float = 0.0
    delta_sum: Optional[float] = 0.0
    lambda_sum: Optional[float] = 0.0
    # 1 / step-size threshold; taken as given so either threshold variant can be evaluated
    alpha: Optional[float] = None
    dim: Optional[int] = None
    h: Optional[tuple] = None

    def require(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise LedgerError(f"bound inputs missing: {', '.join(missing)}")
        if self.eta <= 0:
            raise ThresholdViolation(f"step-size must be positive, got {self.eta}")
        if not 0 < self.kappa <= 1:
            raise LedgerError(f"kappa must lie in (0, 1], got {self.kappa}")
        if self.delay < 1:
            raise LedgerError(f"delay must be >= 1, got {self.delay}")


def bound_lipschitz(inputs):
    """Five-term bound for L-Lipschitz losses with gradient errors"""
    inputs.require('lipschitz', 'delta_sum', 'lambda_sum')
    R, k, L, d, T, eta = inputs.radius, inputs.kappa, inputs.lipschitz, inputs.delay, inputs.horizon, inputs.eta
    V, D, Lam = inputs.path_variation, inputs.delta_sum, inputs.lambda_sum
    return (2.0 * R * R / (eta * k)
            + (3.0 * R + eta * L * (d - 1)) * V / (eta * k)
            + (L * L * d + 4.0 * (d - 1) * L * L) * eta * T / (2.0 * k)
            + eta * d * Lam / (2.0 * k)
            + (eta * d * L + 2.0 * R + 2.0 * eta * (d - 1) * L) * D / k)


def bound_lipschitz_exact(inputs):
    """Exact-gradient form of the Lipschitz bound"""
    inputs.require('lipschitz')
    R, k, L, d, T, eta = inputs.radius, inputs.kappa, inputs.lipschitz, inputs.delay, inputs.horizon, inputs.eta
    V = inputs.path_variation
    return (2.0 * R * R / (eta * k)
            + 3.0 * R * V / (eta * k)
            + eta * L * L * T * d / (2.0 * k)
            + L * (d - 1) * V / k
            + 2.0 * eta * (d - 1) * L * L * T / k)


def lipschitz_optimal_bound(radius, lipschitz, horizon, delay, variation, kappa):
    """Exact-gradient Lipschitz bound at its minimizing step-size: 2 sqrt(AB) + L(d-1)V/kappa"""
    A = (2.0 * radius ** 2 + 3.0 * radius * variation) / kappa
    B = lipschitz ** 2 * horizon * (5 * delay - 4) / (2.0 * kappa)
    return 2.0 * math.sqrt(A * B) + lipschitz * (delay - 1) * variation / kappa


def alpha_weakly_smooth(kappa, gamma, delay, delay_coefficient=4):
    """(d + c sqrt(d)(d-1)) Gamma / (2 kappa); c = 4 with gradient errors, 2 with exact gradients"""
    if gamma <= 0 or not 0 < kappa <= 1 or delay < 1:
        raise LedgerError(f"invalid threshold inputs kappa={kappa}, gamma={gamma}, d={delay}")
    return (delay + delay_coefficient * math.sqrt(delay) * (delay - 1)) * gamma / (2.0 * kappa)


def alpha_bandit(kappa, smoothness, delay):
    """(d + 4 sqrt(d)(d-1)) G / kappa"""
    return alpha_weakly_smooth(kappa, 2.0 * smoothness, delay, delay_coefficient=4)


class QuadraticTerms(NamedTuple):
    a: float
    b: float
    c: float


def weakly_smooth_terms(inputs, gamma, lambda_sum, delta_sum):
    R, k, d, eta = inputs.radius, inputs.kappa, inputs.delay, inputs.eta
    V = inputs.path_variation
    a = 1.0 - inputs.alpha * eta
    b = (math.sqrt(2.0 * R * (d - 1) * gamma * V) / k
         + (math.sqrt(2.0 * d) * (d - 1) * eta + eta * d) / k * math.sqrt(gamma * lambda_sum))
    c = (2.0 * R * R / k + 3.0 * R * V / k
         + eta * d * lambda_sum / (2.0 * k) + 2.0 * R * delta_sum / k)
    return QuadraticTerms(a, b, c)


def quadratic_bound(terms):
    """(b^2 + 2ac + b sqrt(b^2 + 4ac)) / (2 a^2), the square of the positive root of a x^2 - b x - c"""
    a, b, c = terms
    if a <= 0:
        raise ThresholdViolation(f"a = 1 - alpha * eta = {a:.6g} is not positive; step-size above threshold")
    return (b * b + 2.0 * a * c + b * math.sqrt(b * b + 4.0 * a * c)) / (2.0 * a * a)


def bound_weakly_smooth(inputs):
    """Quadratic-solution bound for Gamma-weakly smooth losses; returns (bound, terms)"""
    inputs.require('weak_smoothness', 'alpha', 'delta_sum', 'lambda_sum')
    terms = weakly_smooth_terms(inputs, inputs.weak_smoothness, inputs.lambda_sum, inputs.delta_sum)
    return quadratic_bound(terms), terms


def bound_bandit(inputs):
    """Bandit bound: Gamma = 2G and the error sums implied by the h schedule; returns (bound, terms)"""
    inputs.require('smoothness', 'alpha', 'dim', 'h')
    delta_bar, lambda_bar = bandit_error_sums(inputs.h, inputs.dim, inputs.smoothness)
    terms = weakly_smooth_terms(inputs, 2.0 * inputs.smoothness, lambda_bar, delta_bar)
    return quadratic_bound(terms), terms


def with_threshold(inputs, delay_coefficient):
    """Copy of inputs with alpha set for the weakly smooth evaluator"""
    return replace(inputs, alpha=alpha_weakly_smooth(inputs.kappa, inputs.weak_smoothness,
                                                     inputs.delay, delay_coefficient))


class DoubleSum(NamedTuple):
    by_round: float
    by_origin: float
    bound: float


def double_sum_bound(a, d):
    """Both orders of sum_{t<T} sum_{k=t+1}^{min(T,t+d-1)} a_k and the (d-1) sum a_k bound"""
    a = [float(v) for v in a]
    T = len(a)
    by_round = [a[k - 1] for t in range(1, T) for k in range(t + 1, min(T, t + d - 1) + 1)]
    by_origin = [a[k - 1] for k in range(2, T + 1) for t in range(max(1, k - d + 1), k)]
    return DoubleSum(math.fsum(by_round), math.fsum(by_origin), (d - 1) * math.fsum(a))
