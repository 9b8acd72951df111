"""
Sampling and log-density evaluation for every distribution the sampler uses.

All randomness flows through RngStream: a numpy PCG64 generator seeded from
SeedSequence(seed, spawn_key=(stream_id,)). Equal (seed, stream_id) pairs
replay identical sequences; distinct stream ids give independent streams.
Normal distributions are parameterized by precision throughout.
"""

import math
from typing import Sequence

import numpy as np
from scipy import stats

from shared.utils.exceptions import DistributionException

LOG_2PI = math.log(2.0 * math.pi)


class RngStream:
    """Seedable, stream-splittable random source owned by a single consumer."""

    def __init__(self, seed: int, stream_id: int = 0):
        if not (0 <= int(seed) < 2**64) or not (0 <= int(stream_id) < 2**64):
            raise DistributionException("seed and stream_id must be 64-bit unsigned integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def spawn(self, stream_id: int) -> "RngStream":
        """A fresh stream with the same seed and a different stream id."""
        return RngStream(self.seed, stream_id)

    def random(self) -> float:
        """Uniform draw in [0, 1)."""
        return float(self._generator.random())

    def integer(self, upper: int) -> int:
        """Uniform integer in [0, upper)."""
        if upper < 1:
            raise DistributionException(f"integer() needs a positive upper bound, got {upper}")
        return int(self._generator.integers(upper))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not (np.isfinite(value) and value > 0):
            raise DistributionException(f"{name} must be positive and finite, got {value}")


def _checked(value: float, what: str) -> float:
    if not np.isfinite(value):
        raise DistributionException(f"{what} is not finite ({value})")
    return float(value)


# ---------- normal ----------

def sample_normal(mean: float, precision: float, rng: RngStream) -> float:
    """Draw from Normal(mean, variance = 1/precision)."""
    _require_positive(precision=precision)
    return float(rng.generator.normal(mean, 1.0 / math.sqrt(precision)))


def sample_normal_vector(mean: float, precision: float, size: int, rng: RngStream) -> np.ndarray:
    """size independent Normal(mean, 1/precision) draws."""
    _require_positive(precision=precision)
    return rng.generator.normal(mean, 1.0 / math.sqrt(precision), size=size)


def normal_logpdf(x: float, mean: float, precision: float) -> float:
    _require_positive(precision=precision)
    return _checked(0.5 * math.log(precision) - 0.5 * LOG_2PI - 0.5 * precision * (x - mean) ** 2,
                    "normal log-density")


# ---------- gamma ----------

def sample_gamma(shape: float, rate: float, rng: RngStream) -> float:
    """
    Draw from Gamma(shape, rate), mean shape/rate.

    numpy's generator handles shape < 1 by boosting a Marsaglia-Tsang draw,
    which covers the Ga(0.5, 1) precision prior.
    """
    _require_positive(shape=shape, rate=rate)
    return float(rng.generator.gamma(shape, 1.0 / rate))


def gamma_logpdf(x: float, shape: float, rate: float) -> float:
    _require_positive(x=x, shape=shape, rate=rate)
    return _checked(stats.gamma.logpdf(x, a=shape, scale=1.0 / rate), "gamma log-density")


# ---------- weibull ----------

def weibull_logpdf(x: float, scale: float, shape: float) -> float:
    """log[(shape/scale) (x/scale)^(shape-1) exp(-(x/scale)^shape)]."""
    _require_positive(x=x, scale=scale, shape=shape)
    return _checked(stats.weibull_min.logpdf(x, c=shape, scale=scale), "weibull log-density")


def sample_weibull(scale: float, shape: float, rng: RngStream) -> float:
    _require_positive(scale=scale, shape=shape)
    return float(scale * rng.generator.weibull(shape))


# ---------- uniform / categorical ----------

def sample_uniform(low: float, high: float, rng: RngStream) -> float:
    """Draw from Uniform[low, high)."""
    if not (np.isfinite(low) and np.isfinite(high)) or not low < high:
        raise DistributionException(f"uniform bounds must satisfy low < high, got ({low}, {high})")
    return float(rng.generator.uniform(low, high))


def _normalized_weights(weights: Sequence[float]) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0 or np.any(~np.isfinite(w)) or np.any(w < 0) or w.sum() <= 0:
        raise DistributionException(f"weights must be non-negative and not all zero, got {list(w)}")
    return w / w.sum()


def sample_multinomial_index(weights: Sequence[float], rng: RngStream) -> int:
    """Index drawn with probability proportional to its weight."""
    p = _normalized_weights(weights)
    return int(rng.generator.choice(p.size, p=p))


def sample_multinomial_indices(weights: Sequence[float], size: int, rng: RngStream) -> np.ndarray:
    """Vector form of sample_multinomial_index."""
    p = _normalized_weights(weights)
    return rng.generator.choice(p.size, size=size, p=p).astype(np.int64)


def metropolis_accept(log_ratio: float, rng: RngStream) -> bool:
    """Accept with probability min(1, exp(log_ratio)); always consumes one uniform."""
    u = rng.random()
    if np.isnan(log_ratio):
        raise DistributionException("Metropolis log acceptance ratio is NaN")
    return u < math.exp(min(0.0, log_ratio))
