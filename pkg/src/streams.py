#!/usr/bin/env python3
"""
Per-round loss sequences for the experiment protocols.

Each stream yields one RoundLoss per round t in [T] (the loss f_t, its
minimizer x*_t over X and f_t(x*_t)) and can certify constants that hold for
every round before the run starts, so that a constant step-size can be chosen.
Streams are deterministic given their seed; separate generators are used for
the sampled data and for the minimizer drift.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from geometry import FeasibleBall, project
from losses import (GlmLoss, LossConstants, MinimizerDrift, RadialLoss,
                    drift_step, glm_constants, qf_certificates, qf_drift, qf_initial,
                    radial_constants)
from dogd import ConstantEta, offline_solve

# Generator stream ids, mixed with the run seed
STREAM_DATA = 1
STREAM_DRIFT = 2
STREAM_START = 3


@dataclass(frozen=True, eq=False)
class RoundLoss:
    """f_t together with its comparator x*_t and f_t(x*_t)"""
    loss: object
    minimizer: Optional[np.ndarray]
    min_value: Optional[float]


def static_rounds(loss, horizon, minimizer=None, min_value=None):
    """The same loss repeated for `horizon` rounds"""
    if minimizer is not None and min_value is None:
        min_value = loss.value(minimizer)
    for _ in range(horizon):
        yield RoundLoss(loss, minimizer, min_value)


def _rng(seed, stream):
    return np.random.default_rng([int(seed), stream])


class RadialStream:
    """Fresh amplitudes a ~ U[0, m1]^p and frequencies b ~ U[-m2, m2]^p each round; x*_t = 0"""

    def __init__(self, dim, radius, horizon, seed, amplitude_max=1.0, frequency_max=2.5):
        self.ball = FeasibleBall(radius, dim)
        self.horizon = horizon
        self.seed = seed
        self.amplitude_max = amplitude_max
        self.frequency_max = frequency_max

    def rounds(self):
        rng = _rng(self.seed, STREAM_DATA)
        p = self.ball.dimension
        origin = np.zeros(p)
        for _ in range(self.horizon):
            loss = RadialLoss(
                amplitudes=rng.uniform(0.0, self.amplitude_max, p),
                frequencies=rng.uniform(-self.frequency_max, self.frequency_max, p),
                radius=self.ball.radius,
                amplitude_bound=self.amplitude_max,
                frequency_bound=self.frequency_max,
            )
            yield RoundLoss(loss, origin, 0.0)

    def certify(self):
        p = self.ball.dimension
        template = RadialLoss(np.zeros(p), np.zeros(p), self.ball.radius,
                              self.amplitude_max, self.frequency_max)
        return radial_constants(template)

    def initial_point(self):
        rng = _rng(self.seed, STREAM_START)
        return project(self.ball, rng.uniform(0.2, 0.4, self.ball.dimension))


class GlmStream:
    """m Gaussian samples per round with targets sigma(<a_i, x*_t>); x*_t drifts as a projected random walk"""

    def __init__(self, dim, radius, horizon, seed, samples=1000, drift_exponent=0.5, drift_scale=0.1):
        self.ball = FeasibleBall(radius, dim)
        self.horizon = horizon
        self.seed = seed
        self.samples = samples
        self.drift_exponent = drift_exponent
        self.drift_scale = drift_scale
        self._constants = None

    def _sample_batches(self):
        rng = _rng(self.seed, STREAM_DATA)
        for _ in range(self.horizon):
            yield rng.standard_normal((self.samples, self.ball.dimension))

    def rounds(self):
        drift = MinimizerDrift(self.drift_exponent, self.drift_scale,
                               _rng(self.seed, STREAM_DRIFT), self.ball)
        x_star = project(self.ball, drift.rng.standard_normal(self.ball.dimension))
        for t, batch in enumerate(self._sample_batches(), start=1):
            yield RoundLoss(GlmLoss.from_minimizer(batch, x_star, self.ball.radius), x_star, 0.0)
            x_star = drift_step(drift, x_star, t)

    def certify(self):
        """Largest Gamma over all rounds (one pass over the sample stream)"""
        if self._constants is None:
            gamma = 0.0
            for batch in self._sample_batches():
                gamma = max(gamma, float(np.einsum('ij,ij->i', batch, batch).max()) / 8.0)
            kappa = glm_constants(GlmLoss(np.zeros((1, self.ball.dimension)), [0.5], self.ball.radius)).quasar
            self._constants = LossConstants(quasar=kappa, weak_smoothness=gamma)
        return self._constants

    def initial_point(self):
        rng = _rng(self.seed, STREAM_START)
        x = rng.standard_normal(self.ball.dimension)
        return x * (self.ball.radius / np.linalg.norm(x))


class QuadFracStream:
    """Drifting quadratic fractional losses (B = 0); x*_t from a warm-started projected gradient solver"""

    def __init__(self, dim, radius, horizon, seed, factor=0.01, solver_tol=1e-6, solver_max_iter=100000):
        self.ball = FeasibleBall(radius, dim)
        self.horizon = horizon
        self.seed = seed
        self.factor = factor
        self.solver_tol = solver_tol
        self.solver_max_iter = solver_max_iter
        self._first = qf_initial(dim, radius, _rng(self.seed, STREAM_DATA))
        self.solver_failures = 0

    def rounds(self):
        rng = _rng(self.seed, STREAM_DRIFT)
        loss = self._first
        x_star = np.zeros(self.ball.dimension)
        for t in range(1, self.horizon + 1):
            if t > 1:
                loss = qf_drift(loss, t - 1, rng, self.factor)
            policy = ConstantEta(1.0 / qf_certificates(loss).smoothness)
            solved = offline_solve(loss, x_star, policy, rel_tol=self.solver_tol,
                                   max_iter=self.solver_max_iter, ball=self.ball)
            if not solved.converged:
                self.solver_failures += 1
            x_star = solved.x
            yield RoundLoss(loss, x_star, loss.value(x_star))

    def certify(self):
        """Norms are fixed by renormalisation, so the first round's certificates hold for all rounds"""
        return qf_certificates(self._first)

    def initial_point(self):
        return np.zeros(self.ball.dimension)


def make_stream(family, dim, radius, horizon, seed, **options):
    """Build the stream for a loss family name"""
    if family == 'radial':
        keys = ('amplitude_max', 'frequency_max')
        return RadialStream(dim, radius, horizon, seed, **{k: options[k] for k in keys if k in options})
    if family == 'glm':
        keys = ('samples', 'drift_exponent', 'drift_scale')
        return GlmStream(dim, radius, horizon, seed, **{k: options[k] for k in keys if k in options})
    if family == 'quadfrac':
        keys = ('factor', 'solver_tol', 'solver_max_iter')
        return QuadFracStream(dim, radius, horizon, seed, **{k: options[k] for k in keys if k in options})
    raise ValueError(f"unknown loss family: {family}")
