import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from app.core.errors import ParameterError
from app.core.logging import get_logger
from app.domain.clustertree import MergeTree, components_at_level
from app.domain.forest import ClusterForest, Leaf, Partition, grow_forest

logger = get_logger("domain.pruning")


@dataclass(frozen=True)
class PrunedTree:
    """Cluster tree after the epsilon-tilde lookup pruning.

    At level lambda > epsilon_tilde, two vertices present at lambda share a
    pruned component iff they share a component of G_n(lambda - epsilon_tilde).
    At or below epsilon_tilde every present vertex is in one component.
    """

    base: MergeTree
    epsilon_tilde: float
    forest: ClusterForest

    @property
    def leaf_count(self) -> int:
        return self.forest.leaf_count()


def _check_epsilon(epsilon_tilde: float) -> float:
    if not (math.isfinite(epsilon_tilde) and epsilon_tilde >= 0):
        raise ParameterError(
            f"Pruning parameter must be a finite value >= 0, got {epsilon_tilde}."
        )
    return float(epsilon_tilde)


def prune(t: MergeTree, epsilon_tilde: float) -> PrunedTree:
    """Prune the tree by replaying its spanning edges lifted by epsilon_tilde.

    A merge recorded at level m takes effect at m + epsilon_tilde instead, and
    a floor at epsilon_tilde joins every remaining cluster, including clusters
    from different graph components. With epsilon_tilde = 0 the floor is
    disabled and the result equals the input tree.

    Raises:
        ParameterError: If epsilon_tilde is negative or not finite.
    """
    eps = _check_epsilon(epsilon_tilde)
    forest = grow_forest(
        t.appearance,
        t.spanning_edges,
        lift=eps,
        floor=eps if eps > 0 else None,
    )
    logger.debug(
        "Pruned at epsilon_tilde=%.6g: %d -> %d leaves",
        eps,
        t.forest.leaf_count(),
        forest.leaf_count(),
    )
    return PrunedTree(base=t, epsilon_tilde=eps, forest=forest)


def leaves(pt: PrunedTree) -> list[Leaf]:
    """Leaves of the pruned tree, highest birth level first."""
    return pt.forest.leaves()


def components_at_level_pruned(pt: PrunedTree, level: float) -> Partition:
    return pt.forest.components_at_level(level)


def pruned_merge_level(pt: PrunedTree, i: int, j: int) -> float:
    return pt.forest.merge_level(i, j)


def direct_components_at_level(
    t: MergeTree, level: float, epsilon_tilde: float
) -> Partition:
    """Apply the pruning lookup at one level against the unpruned tree.

    Reference implementation: it re-cuts the unpruned tree at
    level - epsilon_tilde for every query.
    """
    eps = _check_epsilon(epsilon_tilde)
    present = np.flatnonzero(t.appearance >= level)
    if present.size == 0:
        return ()
    if eps > 0 and level <= eps:
        return (tuple(present.tolist()),)

    label = {}
    for block_id, block in enumerate(components_at_level(t, level - eps)):
        for v in block:
            label[v] = block_id

    grouped: dict[int, list[int]] = {}
    for v in present.tolist():
        grouped.setdefault(label[v], []).append(v)
    return tuple(sorted(tuple(block) for block in grouped.values()))


def leaf_count_curve(t: MergeTree, grid: Iterable[float]) -> list[int]:
    """Pruned leaf count for each epsilon_tilde in `grid`."""
    return [prune(t, eps).leaf_count for eps in grid]
