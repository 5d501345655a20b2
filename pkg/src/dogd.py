#!/usr/bin/env python3
"""
Delayed projected online gradient descent.

In round t the learner plays x_t, the oracle is queried at x_t, and the
feedback r_k of every round k in F_t (arrival k + d_k - 1 = t) is applied:

    x_{t+1} = P_X(x_t - eta * sum_{k in F_t} r_k)     if F_t is non-empty
    x_{t+1} = x_t                                      otherwise

Rounds T+1 .. T+d_max-1 are virtual: no loss is played, in-flight feedback is
drained and applied so the trajectory ends where every gradient has arrived.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from analysis import RegretLedger
from delay import FeedbackBuffer
from geometry import PROJECTION_TOL, ProjectionError, ShrunkenBall, contains, project, shrink
from oracles import InfeasibleQueryError, fd_estimate, random_unit_vector

# Generator stream id for the alternating noise direction
STREAM_NOISE = 4
# Iteration cap of the offline subsolver
SOLVER_MAX_ITER = 100_000


def step_size_lipschitz_optimal(radius, lipschitz, horizon, delay, variation=0.0):
    """sqrt(2R(2R + 3V) / (T L^2 (5d - 4)))"""
    if radius <= 0 or lipschitz <= 0 or horizon < 1 or delay < 1 or variation < 0:
        raise ValueError(
            f"need R, L > 0, T, d >= 1, V >= 0; got R={radius}, L={lipschitz}, T={horizon}, d={delay}, V={variation}")
    return math.sqrt(2.0 * radius * (2.0 * radius + 3.0 * variation)
                     / (horizon * lipschitz ** 2 * (5 * delay - 4)))


def step_size_weakly_smooth(kappa, gamma, delay, factor=0.99):
    """factor * 2 kappa / ((d + 2 sqrt(d)(d-1)) Gamma)"""
    if not 0 < kappa <= 1 or gamma <= 0 or delay < 1 or not 0 < factor < 1:
        raise ValueError(f"need kappa in (0,1], Gamma > 0, d >= 1, factor in (0,1); "
                         f"got {kappa}, {gamma}, {delay}, {factor}")
    return factor * 2.0 * kappa / ((delay + 2.0 * math.sqrt(delay) * (delay - 1)) * gamma)


@dataclass(frozen=True)
class ConstantEta:
    value: float

    def eta(self):
        if self.value <= 0:
            raise ValueError(f"step-size must be positive, got {self.value}")
        return float(self.value)


@dataclass(frozen=True)
class LipschitzOptimal:
    radius: float
    lipschitz: float
    horizon: int
    delay: int
    variation: float = 0.0

    def eta(self):
        return step_size_lipschitz_optimal(self.radius, self.lipschitz, self.horizon, self.delay, self.variation)


@dataclass(frozen=True)
class WeaklySmoothSafe:
    kappa: float
    gamma: float
    delay: int
    factor: float = 0.99

    def eta(self):
        return step_size_weakly_smooth(self.kappa, self.gamma, self.delay, self.factor)


class Step(NamedTuple):
    x_next: np.ndarray
    # pre-projection point, None when nothing arrived
    x_prime: Optional[np.ndarray]


def step(x, arrived, eta, ball):
    """One DOGD update from the feedback items arrived this round"""
    if eta <= 0:
        raise ValueError(f"step-size must be positive, got {eta}")
    x = np.asarray(x, dtype=float)
    if not arrived:
        return Step(x.copy(), None)
    direction = np.sum([f.estimate for f in arrived], axis=0)
    x_prime = x - eta * direction
    return Step(project(ball, x_prime), x_prime)


@dataclass
class RunState:
    t: int
    x: np.ndarray
    buffer: FeedbackBuffer = field(default_factory=FeedbackBuffer)
    ledger: RegretLedger = field(default_factory=RegretLedger)
    trajectory: Optional[list] = None


@dataclass(eq=False)
class RunResult:
    # x_1 .. x_T as a (T, p) array, or None when not stored
    trajectory: Optional[np.ndarray]
    # x_{T+1} .. x_{T+d_max-1}
    virtual: list
    final_iterate: np.ndarray
    ledger: RegretLedger
    eta: float


def run(rounds, oracle, schedule, policy, ball, x1, seed=0, store_trajectory=True,
        on_step=None, smoothness=None):
    """Play one DOGD run over the schedule's horizon plus its virtual rounds"""
    eta = policy.eta()
    horizon = schedule.horizon
    domain = None
    if oracle.is_bandit:
        if not isinstance(ball, ShrunkenBall):
            ball = shrink(ball, oracle.max_h(horizon))
        domain = ball.base
    if not contains(ball, x1, PROJECTION_TOL):
        raise ProjectionError(f"x1 has norm {np.linalg.norm(x1):.12g} outside radius {ball.effective_radius}")
    direction = None
    if oracle.kind == 'noisy' and oracle.pattern == 'alternating':
        direction = random_unit_vector(ball.dimension, np.random.default_rng([int(seed), STREAM_NOISE]))

    state = RunState(t=1, x=np.array(x1, dtype=float), trajectory=[] if store_trajectory else None)
    virtual = []
    losses = iter(rounds)
    for t in range(1, schedule.last_round + 1):
        state.t = t
        if t <= horizon:
            if state.trajectory is not None:
                state.trajectory.append(state.x)
            try:
                current = next(losses)
            except StopIteration:
                raise ValueError(f"loss stream ended at round {t}, schedule horizon is {horizon}") from None
            try:
                feedback = oracle.query(current.loss, state.x, t, schedule.delay(t),
                                        direction=direction, domain=domain, smoothness=smoothness)
            except InfeasibleQueryError as e:
                raise InfeasibleQueryError(f"round {t}: {e}") from e
            state.buffer.push(feedback)
            state.ledger.record(current.loss.value(state.x), current.min_value, current.minimizer,
                                feedback.error_bound, feedback.query_count)
        else:
            virtual.append(state.x)
        result = step(state.x, state.buffer.pop_arrivals(t), eta, ball)
        if on_step is not None:
            on_step(t, state.x, result)
        state.x = result.x_next

    trajectory = np.array(state.trajectory) if state.trajectory is not None else None
    return RunResult(trajectory, virtual, state.x, state.ledger, eta)


def average_iterate(trajectory, horizon):
    """(1/T) sum_{t<=T} x_t"""
    points = np.asarray(trajectory, dtype=float)
    if len(points) < horizon or horizon < 1:
        raise ValueError(f"trajectory holds {len(points)} iterates, need {horizon}")
    return points[:horizon].mean(axis=0)


@dataclass(eq=False)
class SolveResult:
    x: np.ndarray
    average: np.ndarray
    iterations: int
    converged: bool


def offline_solve(loss, x_init, policy, rel_tol=1e-6, max_iter=SOLVER_MAX_ITER, ball=None,
                  mode='exact', h_scale=1.0, h_exponent=1.0):
    """Projected gradient descent (or its forward-difference variant) on a single loss"""
    if mode not in ('exact', 'fd'):
        raise ValueError(f"unknown solver mode: {mode}")
    eta = policy.eta()
    domain = None
    if mode == 'fd' and ball is not None:
        domain = ball.base
        ball = shrink(ball, h_scale)
    x = np.array(x_init, dtype=float)
    if ball is not None:
        x = project(ball, x)
    total = np.zeros_like(x)
    for k in range(1, max_iter + 1):
        total += x
        if mode == 'exact':
            g = loss.gradient(x)
        else:
            g = fd_estimate(loss, x, h_scale * k ** -h_exponent, domain=domain).estimate
        x_next = x - eta * g
        if ball is not None:
            x_next = project(ball, x_next)
        change = np.linalg.norm(x_next - x) / max(1.0, np.linalg.norm(x))
        x = x_next
        if change < rel_tol:
            return SolveResult(x, total / k, k, True)
    return SolveResult(x, total / max_iter, max_iter, False)
