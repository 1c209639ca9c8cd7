from dataclasses import dataclass

import numpy as np

from app.core.logging import get_logger
from app.domain.forest import (
    BOTTOM,
    ClusterForest,
    Leaf,
    MergeEvent,
    Partition,
    SpanningEdge,
    descending_order,
    grow_forest,
)
from app.domain.graph import LevelGraph
from app.domain.union_find import DisjointSet

logger = get_logger("domain.clustertree")

__all__ = [
    "BOTTOM",
    "MergeTree",
    "build_merge_tree",
    "components_at_level",
    "merge_level",
]


@dataclass(frozen=True)
class MergeTree:
    """The empirical cluster tree of the level subgraphs G_n(lambda).

    `spanning_edges` holds one edge per union that changed connectivity during
    the sweep, tagged with the level of the inserted vertex. Replaying them
    reproduces the filtration without the full graph.
    """

    forest: ClusterForest
    spanning_edges: tuple[SpanningEdge, ...]

    @property
    def n(self) -> int:
        return self.forest.n

    @property
    def appearance(self) -> np.ndarray:
        return self.forest.levels

    @property
    def merges(self) -> tuple[MergeEvent, ...]:
        return self.forest.merges

    @property
    def roots(self) -> tuple[int, ...]:
        return self.forest.roots

    @property
    def max_level(self) -> float:
        return float(self.forest.levels.max())

    def leaves(self) -> list[Leaf]:
        return self.forest.leaves()

    def distinct_levels(self) -> np.ndarray:
        return np.unique(self.forest.levels)


def build_merge_tree(g: LevelGraph) -> MergeTree:
    """Sweep vertices by descending f_n (ties by index) and record merges.

    Inserting v unions it with every already inserted neighbor. Each union
    that joins two distinct clusters is a merge at level f_n(v).
    """
    levels = g.densities
    ds = DisjointSet(g.n)
    inserted = np.zeros(g.n, dtype=bool)
    edges: list[SpanningEdge] = []

    for v in descending_order(levels).tolist():
        level = float(levels[v])
        for u in g.neighbors(v).tolist():
            if not inserted[u]:
                continue
            if ds.find(u) != ds.find(v):
                ds.union(u, v)
                edges.append(SpanningEdge(v, u, level))
        inserted[v] = True

    forest = grow_forest(levels, edges)
    logger.debug(
        "Merge tree: %d vertices, %d leaves, %d merges, %d roots",
        g.n,
        forest.leaf_count(),
        len(forest.merges),
        len(forest.roots),
    )
    return MergeTree(forest=forest, spanning_edges=tuple(edges))


def components_at_level(t: MergeTree, level: float) -> Partition:
    """Connected components of G_n(level), as sorted blocks."""
    return t.forest.components_at_level(level)


def merge_level(t: MergeTree, i: int, j: int) -> float:
    """Highest level at which i and j are connected; BOTTOM if never."""
    return t.forest.merge_level(i, j)
