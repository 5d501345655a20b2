#!/usr/bin/env python3
"""
Benchmark loss families for online quasar-convex optimization.

Three families with analytic values, gradients and constant certificates:
  - radial product functions  f(x) = g(||x||) q(x/||x||)
  - logistic GLM squared loss  f(x) = (1/2m) sum (sigma(<a_i,x>) - b_i)^2
  - quadratic fractional       f(x) = g(x) / q(x)
plus the drifting-minimizer processes used by the experiment protocols.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from geometry import FeasibleBall, project

# Symmetric eigensolve tolerance for positive-definiteness decisions
EIGEN_TOL = 1e-10
# Points sampled at construction to check the denominator range of a QuadFracLoss
QF_CHECK_SAMPLES = 64
# Relative slack on m <= q(x) <= M (boundary points of the ball hit the bounds exactly)
QF_DOMAIN_RTOL = 1e-12
# Bounded retries when a perturbation breaks positive-definiteness
PD_RETRIES = 10


class DomainViolation(ValueError):
    """Raised when a point or a parameter set lies outside a loss family's domain"""


@dataclass(frozen=True)
class LossConstants:
    """Constant certificates of a loss (absent constants are None)"""
    quasar: float
    lipschitz: Optional[float] = None
    weak_smoothness: Optional[float] = None
    smoothness: Optional[float] = None
    strong_quasar: Optional[float] = None
    # kappa paired with strong_quasar when it differs from `quasar`
    strong_quasar_kappa: Optional[float] = None
    quasiconvexity: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.quasar <= 1):
            raise DomainViolation(f"quasar constant must lie in (0, 1], got {self.quasar}")
        for name in ('lipschitz', 'weak_smoothness', 'smoothness', 'strong_quasar',
                     'strong_quasar_kappa', 'quasiconvexity'):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value >= 0):
                raise DomainViolation(f"{name} must be finite and non-negative, got {value}")


def _norm(x):
    return float(np.linalg.norm(x))


# ---------------------------------------------------------------------------
# Radial product functions

@dataclass(frozen=True, eq=False)
class RadialLoss:
    """g(||x||) q(x/||x||) with g(t) = t^2/(1+t^2), q(u) = sum a_i sin^2(b_i u_i)"""
    amplitudes: np.ndarray
    frequencies: np.ndarray
    radius: float
    amplitude_bound: Optional[float] = None
    frequency_bound: Optional[float] = None

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=float)
        b = np.asarray(self.frequencies, dtype=float)
        if a.ndim != 1 or a.shape != b.shape or a.size < 1:
            raise DomainViolation("amplitudes and frequencies must be vectors of equal length p >= 1")
        m1 = float(a.max()) if self.amplitude_bound is None else float(self.amplitude_bound)
        m2 = float(np.abs(b).max()) if self.frequency_bound is None else float(self.frequency_bound)
        if np.any(a < 0) or np.any(a > m1) or np.any(np.abs(b) > m2):
            raise DomainViolation(f"coefficients outside [0, {m1}] x [-{m2}, {m2}]")
        object.__setattr__(self, 'amplitudes', a)
        object.__setattr__(self, 'frequencies', b)
        object.__setattr__(self, 'amplitude_bound', max(m1, 0.0))
        object.__setattr__(self, 'frequency_bound', max(m2, 0.0))

    @property
    def dim(self):
        return self.amplitudes.size

    def value(self, x):
        return radial_value(self, x)

    def gradient(self, x):
        return radial_gradient(self, x)

    def constants(self):
        return radial_constants(self)


def _radial_q(loss, u):
    return float(np.sum(loss.amplitudes * np.sin(loss.frequencies * u) ** 2))


def radial_value(loss, x):
    """Value of the radial product function; 0 at the origin"""
    x = np.asarray(x, dtype=float)
    n = _norm(x)
    if n == 0.0:
        return 0.0
    g = n * n / (1.0 + n * n)
    return g * _radial_q(loss, x / n)


def radial_gradient(loss, x):
    """Gradient of the radial product function; the zero vector at the origin"""
    x = np.asarray(x, dtype=float)
    n = _norm(x)
    if n == 0.0:
        return np.zeros_like(x)
    u = x / n
    g = n * n / (1.0 + n * n)
    g_prime = 2.0 * n / (n * n + 1.0) ** 2
    grad_q = loss.amplitudes * loss.frequencies * np.sin(2.0 * loss.frequencies * u)
    tangential = grad_q - u * float(u @ grad_q)
    return u * (g_prime * _radial_q(loss, u)) + tangential * (g / n)


def radial_constants(loss):
    """L = m1 p + m1 m2 sqrt(p); kappa = 1/(1+R^2)"""
    p = loss.dim
    m1, m2 = loss.amplitude_bound, loss.frequency_bound
    return LossConstants(
        quasar=1.0 / (1.0 + loss.radius ** 2),
        lipschitz=m1 * p + m1 * m2 * math.sqrt(p),
    )


# ---------------------------------------------------------------------------
# Logistic GLM squared loss

def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def sigmoid_prime(z):
    s = sigmoid(z)
    return s * (1.0 - s)


@dataclass(frozen=True, eq=False)
class GlmLoss:
    """(1/2m) sum_i (sigma(<a_i, x>) - b_i)^2 over m samples"""
    samples: np.ndarray
    targets: np.ndarray
    radius: float
    minimizer: Optional[np.ndarray] = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.samples, dtype=float))
        b = np.asarray(self.targets, dtype=float).reshape(-1)
        if A.shape[0] < 1 or A.shape[0] != b.size:
            raise DomainViolation(f"need m >= 1 samples matching targets, got {A.shape} and {b.shape}")
        if np.any(b <= 0.0) or np.any(b >= 1.0):
            raise DomainViolation("targets must lie strictly inside (0, 1)")
        object.__setattr__(self, 'samples', A)
        object.__setattr__(self, 'targets', b)

    @classmethod
    def from_minimizer(cls, samples, x_star, radius):
        """Targets b_i = sigma(<a_i, x*>), so that f(x*) = 0"""
        samples = np.atleast_2d(np.asarray(samples, dtype=float))
        x_star = np.asarray(x_star, dtype=float)
        return cls(samples, sigmoid(samples @ x_star), radius, x_star.copy())

    @property
    def dim(self):
        return self.samples.shape[1]

    def value(self, x):
        return glm_value(self, x)

    def gradient(self, x):
        return glm_gradient(self, x)

    def constants(self):
        return glm_constants(self)


def glm_value(loss, x):
    residual = sigmoid(loss.samples @ np.asarray(x, dtype=float)) - loss.targets
    return float(residual @ residual) / (2.0 * loss.targets.size)


def glm_gradient(loss, x):
    z = loss.samples @ np.asarray(x, dtype=float)
    s = sigmoid(z)
    weights = s * (1.0 - s) * (s - loss.targets)
    return loss.samples.T @ weights / loss.targets.size


def glm_constants(loss):
    """Gamma = max ||a_i||^2 / 8; kappa = min(1, 8 sigma'(R))"""
    row_norms = np.einsum('ij,ij->i', loss.samples, loss.samples)
    return LossConstants(
        quasar=min(1.0, 8.0 * float(sigmoid_prime(loss.radius))),
        weak_smoothness=float(row_norms.max()) / 8.0,
    )


# ---------------------------------------------------------------------------
# Quadratic fractional functions

@dataclass(frozen=True, eq=False)
class QuadFracLoss:
    """(1/2 <Ax,x> + <a,x> + alpha) / (1/2 <Bx,x> + <b,x> + beta) on a ball of given radius"""
    A: np.ndarray
    a: np.ndarray
    alpha: float
    B: np.ndarray
    b: np.ndarray
    beta: float
    m_lo: float
    M_hi: float
    radius: float
    check_seed: int = 0

    def __post_init__(self):
        for name in ('A', 'a', 'B', 'b'):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        p = self.a.size
        if self.A.shape != (p, p) or self.B.shape != (p, p) or self.b.shape != (p,):
            raise DomainViolation("inconsistent quadratic fractional dimensions")
        if not np.allclose(self.A, self.A.T) or not np.allclose(self.B, self.B.T):
            raise DomainViolation("A and B must be symmetric")
        if not (0 < self.m_lo < self.M_hi):
            raise DomainViolation(f"need 0 < m_lo < M_hi, got {self.m_lo}, {self.M_hi}")
        self._check_denominator()

    def _check_denominator(self):
        rng = np.random.default_rng(self.check_seed)
        p = self.a.size
        directions = rng.standard_normal((QF_CHECK_SAMPLES, p))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        points = directions * (self.radius * rng.random(QF_CHECK_SAMPLES) ** (1.0 / p))[:, None]
        b_norm = _norm(self.b)
        if b_norm > 0:
            extreme = self.b * (self.radius / b_norm)
            points = np.vstack([points, extreme, -extreme, np.zeros(p)])
        q = 0.5 * np.einsum('ij,jk,ik->i', points, self.B, points) + points @ self.b + self.beta
        slack = QF_DOMAIN_RTOL * self.M_hi
        if q.min() < self.m_lo - slack or q.max() > self.M_hi + slack:
            raise DomainViolation(
                f"denominator range [{q.min():.6g}, {q.max():.6g}] leaves [{self.m_lo}, {self.M_hi}]")

    @property
    def dim(self):
        return self.a.size

    def numerator(self, x):
        return 0.5 * float(x @ self.A @ x) + float(self.a @ x) + self.alpha

    def denominator(self, x):
        return 0.5 * float(x @ self.B @ x) + float(self.b @ x) + self.beta

    def value(self, x):
        return qf_value(self, x)

    def gradient(self, x):
        return qf_gradient(self, x)

    def constants(self):
        return qf_certificates(self)


def _qf_parts(loss, x):
    x = np.asarray(x, dtype=float)
    q = loss.denominator(x)
    if q < loss.m_lo * (1.0 - QF_DOMAIN_RTOL):
        raise DomainViolation(f"q(x) = {q:.6g} below m = {loss.m_lo}")
    return x, loss.numerator(x), q


def qf_value(loss, x):
    _, g, q = _qf_parts(loss, x)
    return g / q


def qf_gradient(loss, x):
    x, g, q = _qf_parts(loss, x)
    return (q * (loss.A @ x + loss.a) - g * (loss.B @ x + loss.b)) / (q * q)


def min_eigenvalue(A):
    """Smallest eigenvalue of a symmetric matrix (LAPACK symmetric eigensolve)"""
    return float(np.linalg.eigvalsh(A)[0])


def qf_certificates(loss):
    """Quasar, strong-quasar, quasiconvexity and smoothness certificates for B = 0 style instances"""
    sigma_min = min_eigenvalue(loss.A)
    if sigma_min <= EIGEN_TOL:
        raise DomainViolation(f"A is not positive definite (sigma_min = {sigma_min:.3g})")
    m, M, R = loss.m_lo, loss.M_hi, loss.radius
    nA = float(np.linalg.norm(loss.A, 2))
    nB = float(np.linalg.norm(loss.B, 2))
    na, nb = _norm(loss.a), _norm(loss.b)
    smooth = (nA ** 2 / m
              + 2.0 * (nB * R + nb) * (nA * R + na) / m ** 2
              + (nA * R ** 2 + 2.0 * na * R + 2.0 * loss.alpha) * (nB * R + nb) ** 2 / m ** 3
              + (0.5 * nA * R ** 2 + na * R + loss.alpha) * nB ** 2 / m ** 2)
    kappa = m / M
    return LossConstants(
        quasar=kappa,
        smoothness=smooth,
        # G-smooth implies 2G-weakly smooth
        weak_smoothness=2.0 * smooth,
        strong_quasar=sigma_min / m,
        strong_quasar_kappa=kappa / 2.0,
        quasiconvexity=sigma_min / M,
    )


def qf_strong_quasar_family(loss, lam):
    """(lam kappa, kappa (1/lam - 1) sigma_min(A) / (4M)) for lam in (0, 1)"""
    if not (0 < lam < 1):
        raise DomainViolation(f"lambda must lie in (0, 1), got {lam}")
    kappa = loss.m_lo / loss.M_hi
    sigma_min = min_eigenvalue(loss.A)
    return lam * kappa, kappa * (1.0 / lam - 1.0) * sigma_min / (4.0 * loss.M_hi)


def quasar_gap(loss, x, x_star, kappa):
    """f(x*) - f(x) - (1/kappa) <grad f(x), x* - x>; non-negative where quasar-convexity holds"""
    x = np.asarray(x, dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    return loss.value(x_star) - loss.value(x) - float(loss.gradient(x) @ (x_star - x)) / kappa


# ---------------------------------------------------------------------------
# Drifting minimizers

@dataclass
class MinimizerDrift:
    """x*_{t+1} = P_X(x*_t + scale t^-exponent v_t), v_t standard Gaussian"""
    exponent: float
    scale: float
    rng: np.random.Generator
    ball: FeasibleBall

    def __post_init__(self):
        if self.exponent < 0 or self.scale < 0:
            raise DomainViolation(f"drift exponent and scale must be non-negative, got {self.exponent}, {self.scale}")
        if self.exponent == 0 and self.scale > 0:
            raise DomainViolation("a moving minimizer needs a positive drift exponent")


def drift_step(drift, current, t):
    """One step of the minimizer random walk, projected back onto the feasible ball"""
    if t < 1:
        raise DomainViolation(f"round index must be >= 1, got {t}")
    v = drift.rng.standard_normal(drift.ball.dimension)
    return project(drift.ball, np.asarray(current, dtype=float) + drift.scale * t ** (-drift.exponent) * v)


def random_pd_matrix(p, rng):
    """M^T M / ||M^T M|| with Gaussian M: unit-norm positive definite"""
    M = rng.standard_normal((p, p))
    S = M.T @ M
    return S / np.linalg.norm(S, 2)


def _qf_loss(A, a, b, radius, check_seed=0, alpha=10.0, margin=100.0):
    beta = _norm(b) * radius + margin
    return QuadFracLoss(
        A=A, a=a, alpha=alpha, B=np.zeros_like(A), b=b, beta=beta,
        m_lo=margin, M_hi=_norm(b) * radius + beta, radius=radius, check_seed=check_seed)


def qf_initial(p, radius, rng):
    """Unit-norm PD A_0; a_0, b_0 Gaussian rescaled to norm 0.1"""
    A = random_pd_matrix(p, rng)
    a = rng.standard_normal(p)
    b = rng.standard_normal(p)
    return _qf_loss(A, 0.1 * a / _norm(a), 0.1 * b / _norm(b), radius)


def qf_drift(loss, t, rng, factor=0.01):
    """Perturb and renormalise (A, a, b); beta, alpha, m and M follow the new b"""
    if t < 1:
        raise DomainViolation(f"round index must be >= 1, got {t}")
    step = factor * t ** -0.5
    for _ in range(PD_RETRIES):
        A = loss.A + step * random_pd_matrix(loss.dim, rng)
        A = 0.5 * (A + A.T)
        A /= np.linalg.norm(A, 2)
        if min_eigenvalue(A) > EIGEN_TOL:
            break
    else:
        raise DomainViolation(f"round {t}: could not keep A positive definite after {PD_RETRIES} draws")
    a = loss.a + step * rng.standard_normal(loss.dim)
    b = loss.b + step * rng.standard_normal(loss.dim)
    return _qf_loss(A, a / (10.0 * _norm(a)), b / (10.0 * _norm(b)), loss.radius,
                    check_seed=loss.check_seed)
