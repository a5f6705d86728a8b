"""Scalar Monte Carlo estimators and the shared termination rules.

These are the host-side building blocks: the uniform and importance-sampled
integral estimators with running statistics, the balance heuristic used to
combine sampling strategies, and the Russian roulette rule every path-based
integrator applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import EstimatorError
from .rng import Rng

RR_START_DEPTH = 5
RR_MIN_SURVIVAL = 0.05


@dataclass(frozen=True)
class McEstimate:
    """Result of a Monte Carlo run with enough state to extend or pool it."""

    mean: float
    n_samples: int
    sum: float
    sum_sq: float

    @property
    def variance_of_mean(self) -> float:
        """Unbiased estimate of Var[mean]; zero for a single sample."""
        if self.n_samples < 2:
            return 0.0
        s2 = (self.sum_sq - self.sum * self.sum / self.n_samples) / (
            self.n_samples - 1
        )
        return max(0.0, s2) / self.n_samples

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance_of_mean)


def estimate_uniform(
    f: Callable[[float], float], a: float, b: float, n: int, rng: Rng
) -> McEstimate:
    """Estimate the integral of f over [a, b] with uniform samples.

    Each sample contributes (b - a) * f(X_i) for X_i uniform in [a, b].
    """
    if n <= 0:
        raise EstimatorError("sample count must be positive", n, float("nan"))
    width = b - a
    total = 0.0
    total_sq = 0.0
    for i in range(n):
        x = a + rng.next_float() * width
        fx = f(x)
        if not math.isfinite(fx):
            raise EstimatorError("integrand returned a non-finite value", i, x)
        y = width * fx
        total += y
        total_sq += y * y
    return McEstimate(total / n, n, total, total_sq)


def estimate_importance(
    f: Callable[[float], float],
    sampler: Callable[[Rng], tuple[float, float]],
    n: int,
    rng: Rng,
) -> McEstimate:
    """Estimate an integral of f with samples from an arbitrary density.

    The sampler draws (x, pdf(x)); each sample contributes f(x) / pdf(x).
    A zero or negative pdf means the sampler cannot cover the integrand at
    that point, which would silently bias the estimate, so it is an error.
    """
    if n <= 0:
        raise EstimatorError("sample count must be positive", n, float("nan"))
    total = 0.0
    total_sq = 0.0
    for i in range(n):
        x, pdf = sampler(rng)
        if pdf <= 0.0:
            raise EstimatorError("sampler returned a non-positive pdf", i, x)
        fx = f(x)
        if not math.isfinite(fx):
            raise EstimatorError("integrand returned a non-finite value", i, x)
        y = fx / pdf
        total += y
        total_sq += y * y
    return McEstimate(total / n, n, total, total_sq)


def mis_balance_weight(pdf_a: float, pdf_b: float) -> float:
    """Balance-heuristic weight of strategy a against strategy b."""
    if pdf_a < 0.0 or pdf_b < 0.0:
        raise EstimatorError("pdfs must be non-negative", 0, min(pdf_a, pdf_b))
    total = pdf_a + pdf_b
    if total == 0.0:
        raise EstimatorError("both strategy pdfs are zero", 0, 0.0)
    return pdf_a / total


def russian_roulette(
    throughput: tuple[float, float, float],
    depth: int,
    rng: Rng,
    start_depth: int = RR_START_DEPTH,
    min_survival: float = RR_MIN_SURVIVAL,
) -> tuple[bool, tuple[float, float, float]]:
    """Probabilistic path termination with throughput compensation.

    Below start_depth the path always survives unchanged.  Beyond it the
    survival probability is the maximum throughput channel clamped to
    [min_survival, 1]; survivors are rescaled by 1/q so the expected
    contribution is untouched.
    """
    if depth < start_depth:
        return True, throughput
    q = max(min_survival, min(1.0, max(throughput)))
    if rng.next_float() >= q:
        return False, (0.0, 0.0, 0.0)
    inv = 1.0 / q
    return True, (throughput[0] * inv, throughput[1] * inv, throughput[2] * inv)
