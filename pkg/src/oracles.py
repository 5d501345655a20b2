#!/usr/bin/env python3
"""
Gradient feedback oracles.

  exact     r = grad f(x)
  noisy     r = grad f(x) + m_t, ||m_t|| = delta_t along a deterministic pattern
  fd        (p+1)-point forward differences with step h_t
  sym       2p-point symmetric differences with step h_t
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from delay import arrival_round
from geometry import PROJECTION_TOL

ORACLE_KINDS = ('exact', 'noisy', 'fd', 'sym')
NOISE_PATTERNS = ('fixed', 'cyclic', 'alternating')


class InfeasibleQueryError(ValueError):
    """A finite-difference query point lies outside the feasible set"""


@dataclass(frozen=True, eq=False)
class Feedback:
    """Gradient information queried in origin_round, received in arrival_round"""
    origin_round: int
    estimate: np.ndarray
    arrival_round: int
    # None when the smoothness constant needed to bound the error is unknown
    error_bound: Optional[float]
    query_count: int

    def __post_init__(self):
        if self.arrival_round < self.origin_round:
            raise ValueError(f"arrival {self.arrival_round} precedes origin {self.origin_round}")
        if self.error_bound is not None and self.error_bound < 0:
            raise ValueError(f"error bound must be non-negative, got {self.error_bound}")


def exact_gradient(loss, x, origin_round=1, delay=1):
    return Feedback(origin_round, loss.gradient(x), arrival_round(origin_round, delay), 0.0, 1)


def noise_direction(pattern, t, p, direction=None):
    """Unit vector carrying the gradient error in round t"""
    if pattern == 'fixed':
        e = np.zeros(p)
        e[0] = 1.0
        return e
    if pattern == 'cyclic':
        e = np.zeros(p)
        e[t % p] = 1.0
        return e
    if pattern == 'alternating':
        if direction is None:
            raise ValueError("alternating noise needs a unit direction drawn for the run")
        return direction if t % 2 == 0 else -direction
    raise ValueError(f"unknown noise pattern: {pattern}")


def random_unit_vector(p, rng):
    v = rng.standard_normal(p)
    return v / np.linalg.norm(v)


def noisy_gradient(loss, x, delta, pattern='fixed', origin_round=1, delay=1, direction=None):
    if delta < 0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    g = loss.gradient(x)
    if delta == 0:
        r = g
    else:
        r = g + delta * noise_direction(pattern, origin_round, g.size, direction)
    return Feedback(origin_round, r, arrival_round(origin_round, delay), float(delta), 1)


def _check_queries(x, h, domain, symmetric):
    """Raise unless every x +- h e_i lies in the domain ball"""
    if domain is None:
        return
    base = float(x @ x) + h * h
    sq = base + 2.0 * h * x
    if symmetric:
        sq = np.maximum(sq, base - 2.0 * h * x)
    worst = int(np.argmax(sq))
    limit = domain.effective_radius + PROJECTION_TOL
    if math.sqrt(max(float(sq[worst]), 0.0)) > limit:
        raise InfeasibleQueryError(
            f"query point along axis {worst} has norm {math.sqrt(sq[worst]):.12g} > radius {domain.effective_radius}")


def _difference_error_bound(p, h, smoothness):
    if smoothness is None:
        return None
    return math.sqrt(p) * smoothness * h / 2.0


def fd_estimate(loss, x, h, origin_round=1, delay=1, domain=None, smoothness=None):
    """sum_i ((f(x + h e_i) - f(x)) / h) e_i"""
    if h <= 0:
        raise ValueError(f"difference step must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    _check_queries(x, h, domain, symmetric=False)
    p = x.size
    f0 = loss.value(x)
    r = np.empty(p)
    shifted = x.copy()
    for i in range(p):
        shifted[i] = x[i] + h
        r[i] = (loss.value(shifted) - f0) / h
        shifted[i] = x[i]
    return Feedback(origin_round, r, arrival_round(origin_round, delay),
                    _difference_error_bound(p, h, smoothness), p + 1)


def sym_estimate(loss, x, h, origin_round=1, delay=1, domain=None, smoothness=None):
    """sum_i ((f(x + h e_i) - f(x - h e_i)) / 2h) e_i"""
    if h <= 0:
        raise ValueError(f"difference step must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    _check_queries(x, h, domain, symmetric=True)
    p = x.size
    r = np.empty(p)
    shifted = x.copy()
    for i in range(p):
        shifted[i] = x[i] + h
        upper = loss.value(shifted)
        shifted[i] = x[i] - h
        lower = loss.value(shifted)
        shifted[i] = x[i]
        r[i] = (upper - lower) / (2.0 * h)
    return Feedback(origin_round, r, arrival_round(origin_round, delay),
                    _difference_error_bound(p, h, smoothness), 2 * p)


@dataclass(frozen=True)
class OracleKind:
    """Oracle choice with its delta_t = delta_scale t^-delta_exponent or h_t = h_scale t^-h_exponent schedule"""
    kind: str = 'exact'
    delta_scale: float = 0.0
    delta_exponent: float = 1.0
    pattern: str = 'fixed'
    h_scale: float = 1.0
    h_exponent: float = 1.0

    def __post_init__(self):
        if self.kind not in ORACLE_KINDS:
            raise ValueError(f"unknown oracle kind: {self.kind}")
        if self.pattern not in NOISE_PATTERNS:
            raise ValueError(f"unknown noise pattern: {self.pattern}")
        if self.delta_scale < 0:
            raise ValueError(f"delta scale must be non-negative, got {self.delta_scale}")
        if self.is_bandit and (self.h_scale <= 0 or self.h_exponent < 0):
            raise ValueError(f"need h_scale > 0 and h_exponent >= 0, got {self.h_scale}, {self.h_exponent}")

    @property
    def is_bandit(self):
        return self.kind in ('fd', 'sym')

    def delta(self, t):
        return self.delta_scale * t ** -self.delta_exponent if self.kind == 'noisy' else 0.0

    def h(self, t):
        return self.h_scale * t ** -self.h_exponent

    def max_h(self, horizon):
        """max_t h_t over [T] (power schedules are monotone, so an endpoint)"""
        return max(self.h(1), self.h(horizon))

    def query(self, loss, x, t, delay, direction=None, domain=None, smoothness=None):
        if self.kind == 'exact':
            return exact_gradient(loss, x, t, delay)
        if self.kind == 'noisy':
            return noisy_gradient(loss, x, self.delta(t), self.pattern, t, delay, direction)
        estimator = fd_estimate if self.kind == 'fd' else sym_estimate
        return estimator(loss, x, self.h(t), t, delay, domain, smoothness)
