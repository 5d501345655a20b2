#!/usr/bin/env python3
"""
Feasible sets for delayed online gradient descent.
Origin-centred Euclidean balls, their projection operator, and the shrunken
ball X_h that keeps finite-difference query points feasible.
"""

import math
from dataclasses import dataclass

import numpy as np

# Absolute slack on the norm constraint (radial scaling round-off)
PROJECTION_TOL = 1e-12


class ProjectionError(ValueError):
    """Raised for non-finite points, dimension mismatches or invalid sets"""


@dataclass(frozen=True)
class FeasibleBall:
    """Ball {x : ||x|| <= radius} in R^dimension"""
    radius: float
    dimension: int

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ProjectionError(f"radius must be positive and finite, got {self.radius}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ProjectionError(f"dimension must be a positive integer, got {self.dimension}")

    @property
    def effective_radius(self):
        return float(self.radius)

    @property
    def base(self):
        return self


@dataclass(frozen=True)
class ShrunkenBall:
    """Contraction (1 - h/R) * X of a FeasibleBall"""
    base: FeasibleBall
    h: float

    def __post_init__(self):
        if not (0 < self.h < self.base.radius):
            raise ProjectionError(f"h must lie in (0, {self.base.radius}), got {self.h}")

    @property
    def factor(self):
        return 1.0 - self.h / self.base.radius

    @property
    def effective_radius(self):
        return self.factor * self.base.radius

    @property
    def radius(self):
        return self.effective_radius

    @property
    def dimension(self):
        return self.base.dimension


def _checked(ball, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (ball.dimension,):
        raise ProjectionError(f"expected a vector of length {ball.dimension}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ProjectionError(f"non-finite point: {x}")
    return x


def project(ball, x):
    """Nearest point of the ball to x (radial scaling when outside)"""
    x = _checked(ball, x)
    radius = ball.effective_radius
    norm = float(np.linalg.norm(x))
    # points within round-off of the sphere are fixed points, keeping project idempotent
    if norm <= radius + PROJECTION_TOL:
        return x.copy()
    return x * (radius / norm)


def shrink(ball, h):
    """Return X_h for the step h, 0 < h < R"""
    if isinstance(ball, ShrunkenBall):
        ball = ball.base
    return ShrunkenBall(ball, float(h))


def contains(ball, x, tol=0.0):
    """True iff ||x|| <= effective radius + tol"""
    if tol < 0:
        raise ProjectionError(f"tolerance must be non-negative, got {tol}")
    x = _checked(ball, x)
    return bool(np.linalg.norm(x) <= ball.effective_radius + tol)
