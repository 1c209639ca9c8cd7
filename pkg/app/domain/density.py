import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from app.core.errors import ParameterError
from app.core.logging import get_logger
from app.domain.geometry import KnnIndex, PointSet
from app.schemas.config import EpsilonMode, KRule

logger = get_logger("domain.density")


@dataclass(frozen=True)
class DensityEstimate:
    """k-NN density values f_n(X_i), one per sample point."""

    values: np.ndarray
    k: int
    n: int
    d: int

    def __post_init__(self) -> None:
        self.values.flags.writeable = False

    @property
    def f_max(self) -> float:
        """Surrogate for the density bound F."""
        return float(self.values.max())

    def level_set(self, level: float) -> np.ndarray:
        """Indices i with f_n(X_i) >= level, ascending."""
        return np.flatnonzero(self.values >= level)


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d, pi^(d/2) / Gamma(d/2 + 1)."""
    if d < 1:
        raise ParameterError(f"Dimension must be >= 1, got {d}.")
    return math.exp(0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1.0))


def density_estimate(ps: PointSet, idx: KnnIndex) -> DensityEstimate:
    """f_n(X_i) = k / (n * v_d * r_{k,n}(X_i)^d)."""
    if idx.n != ps.n:
        raise ParameterError(
            f"k-NN index covers {idx.n} points but the sample has {ps.n}."
        )
    v_d = unit_ball_volume(ps.d)
    values = idx.k / (ps.n * v_d * idx.radii**ps.d)
    if not np.isfinite(values).all():
        raise ParameterError(
            "Density estimate overflowed; rescale the coordinates.", kind="overflow"
        )
    logger.debug(
        "Density estimate (n=%d, d=%d, k=%d): max f_n=%.6g",
        ps.n,
        ps.d,
        idx.k,
        float(values.max()),
    )
    return DensityEstimate(values=values, k=idx.k, n=ps.n, d=ps.d)


def epsilon_k(F: float, k: int, n: int, delta: float) -> float:
    """Density estimation error scale 11 F sqrt(ln(2n/delta) / k)."""
    if not (F > 0 and math.isfinite(F)):
        raise ParameterError(f"F must be > 0, got {F}.")
    if k < 1 or n < 1:
        raise ParameterError(f"k and n must be >= 1, got k={k}, n={n}.")
    if not (0 < delta < 1):
        raise ParameterError(f"delta must be in (0, 1), got {delta}.")
    return 11.0 * F * math.sqrt(math.log(2.0 * n / delta) / k)


def suggest_epsilon_tilde(mode: EpsilonMode, F: float | None, k: int, n: int) -> float:
    """Resolve a pruning parameter mode to a value.

    `F` is only consulted by the F-dependent modes.
    """
    if mode.kind == "fixed":
        assert mode.value is not None
        if mode.value < 0:
            raise ParameterError(f"Pruning parameter must be >= 0, got {mode.value}.")
        return float(mode.value)

    if F is None or not (F > 0 and math.isfinite(F)):
        raise ParameterError(f"Epsilon mode '{mode.kind}' needs F > 0, got {F}.")
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}.")

    match mode.kind:
        case "fsqrtk":
            return F / math.sqrt(k)
        case "f4sqrtk":
            return F / (4.0 * math.sqrt(k))
        case "theory":
            assert mode.value is not None
            return 3.0 * epsilon_k(F, k, n, mode.value)
    raise ParameterError(f"Unknown epsilon mode '{mode.kind}'.")


def knn_rule_k(n: int, rule: KRule) -> int:
    """Resolve a k rule for sample size n.

    - logn15: (ln n)^1.5 rounded half up, at least 1.
    - n04: ceil(n^0.4).
    """
    if n < 2:
        raise ParameterError(f"Need at least 2 points to pick k, got n={n}.")
    match rule:
        case "logn15":
            return max(1, math.floor(math.log(n) ** 1.5 + 0.5))
        case "n04":
            return max(1, math.ceil(n**0.4))
    raise ParameterError(f"Unknown k rule '{rule}'. Available: logn15, n04")


def level_counts(dens: DensityEstimate, levels: Iterable[float]) -> list[int]:
    """Number of sample points with f_n >= level, per level."""
    ordered = np.sort(dens.values)
    return [
        int(ordered.size - np.searchsorted(ordered, level, side="left"))
        for level in levels
    ]
