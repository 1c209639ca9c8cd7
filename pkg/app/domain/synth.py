"""Seeded Gaussian mixture samples with analytically known densities.

Streams come from NumPy's counter-based Philox bit generator keyed by the
integer seed. Component labels use one uniform each; Gaussian coordinates use
Box-Muller on further uniforms, so a (spec, n, seed) triple maps to the same
sample everywhere.
"""

import math
from collections.abc import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import ncx2

from app.core.errors import ParameterError
from app.core.logging import get_logger
from app.domain.geometry import PointSet, build_point_set
from app.schemas.mixture import MixtureComponent, MixtureSpec

logger = get_logger("domain.synth")


def two_mode_mixture() -> MixtureSpec:
    """0.5 N([0, 0], I_2) + 0.5 N([1, 4], I_2)."""
    return MixtureSpec(
        d=2,
        components=(
            MixtureComponent(weight=0.5, mean=(0.0, 0.0), variance=1.0),
            MixtureComponent(weight=0.5, mean=(1.0, 4.0), variance=1.0),
        ),
    )


def five_mode_mixture(d: int = 7) -> MixtureSpec:
    """sum_{i=1..5} 0.2 N(2 sqrt(d) e_i, I_d)."""
    if d < 5:
        raise ParameterError(f"The five-mode mixture needs d >= 5, got {d}.")
    shift = 2.0 * math.sqrt(d)
    components = []
    for i in range(5):
        mean = [0.0] * d
        mean[i] = shift
        components.append(MixtureComponent(weight=0.2, mean=tuple(mean), variance=1.0))
    return MixtureSpec(d=d, components=tuple(components))


def _generator(seed: int) -> np.random.Generator:
    if seed < 0:
        raise ParameterError(f"Seed must be >= 0, got {seed}.")
    return np.random.Generator(np.random.Philox(seed))


def _box_muller(rng: np.random.Generator, count: int) -> np.ndarray:
    pairs = (count + 1) // 2
    u1 = rng.random(pairs)
    u2 = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    angle = 2.0 * np.pi * u2
    z = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1).ravel()
    return z[:count]


def sample_with_labels(
    spec: MixtureSpec, n: int, seed: int
) -> tuple[PointSet, np.ndarray]:
    """Draw n points and return them with their component labels."""
    if n < 1:
        raise ParameterError(f"Sample size must be >= 1, got {n}.")
    rng = _generator(seed)

    cdf = np.cumsum([c.weight for c in spec.components])
    cdf[-1] = 1.0
    labels = np.searchsorted(cdf, rng.random(n), side="right")

    z = _box_muller(rng, n * spec.d).reshape(n, spec.d)
    means = np.array([c.mean for c in spec.components], dtype=np.float64)
    scales = np.sqrt([c.variance for c in spec.components])
    points = means[labels] + scales[labels, None] * z

    logger.debug("Sampled n=%d, d=%d from a %d-component mixture (seed=%d)",
                 n, spec.d, len(spec.components), seed)
    return build_point_set(points), labels


def sample(spec: MixtureSpec, n: int, seed: int) -> PointSet:
    return sample_with_labels(spec, n, seed)[0]


def true_density(spec: MixtureSpec, x: Sequence[float] | np.ndarray) -> float | np.ndarray:
    """Mixture density at one point (returns float) or at rows of an array."""
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != spec.d:
        raise ParameterError(
            f"Point dimension {pts.shape[1]} does not match mixture dimension {spec.d}."
        )

    total = np.zeros(pts.shape[0])
    for c in spec.components:
        sq = np.sum((pts - np.asarray(c.mean)) ** 2, axis=1)
        norm = (2.0 * math.pi * c.variance) ** (-0.5 * spec.d)
        total += c.weight * norm * np.exp(-0.5 * sq / c.variance)
    return float(total[0]) if single else total


def ball_mass(spec: MixtureSpec, x: Sequence[float] | np.ndarray, r: float) -> float:
    """Probability mass of the closed ball B(x, r) under the mixture."""
    if r <= 0:
        return 0.0
    point = np.asarray(x, dtype=np.float64)
    mass = 0.0
    for c in spec.components:
        offset = float(np.sum((point - np.asarray(c.mean)) ** 2))
        mass += c.weight * float(
            ncx2.cdf(r * r / c.variance, spec.d, offset / c.variance)
        )
    return mass


def population_knn_radius(
    spec: MixtureSpec, x: Sequence[float] | np.ndarray, k: int, n: int
) -> float:
    """Radius r_k(x) of the smallest ball around x with mass k/n."""
    if not (1 <= k <= n):
        raise ParameterError(f"Need 1 <= k <= n, got k={k}, n={n}.")
    target = k / n
    hi = 1.0
    while ball_mass(spec, x, hi) < target:
        hi *= 2.0
        if hi > 1e6:
            raise ParameterError("Could not bracket the population k-NN radius.")
    return float(brentq(lambda r: ball_mass(spec, x, r) - target, 0.0, hi, xtol=1e-12))
