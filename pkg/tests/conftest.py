from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import pytest

from app.domain.clustertree import MergeTree, build_merge_tree
from app.domain.density import DensityEstimate, density_estimate
from app.domain.geometry import KnnIndex, PointSet, build_point_set, knn_index
from app.domain.graph import LevelGraph, build_graph
from app.schemas.config import GraphKind


@dataclass(frozen=True)
class Instance:
    points: PointSet
    knn: KnnIndex
    density: DensityEstimate
    graph: LevelGraph
    tree: MergeTree


def random_points(seed: int, n: int, d: int) -> PointSet:
    rng = np.random.default_rng(seed)
    # a few loose blobs so trees have several branches
    centers = rng.uniform(-4.0, 4.0, size=(3, d))
    labels = rng.integers(0, 3, size=n)
    return build_point_set(centers[labels] + rng.normal(size=(n, d)))


def make_instance(
    seed: int, n: int, d: int, k: int, kind: GraphKind = GraphKind.KNN, theta: float = 1.0
) -> Instance:
    points = random_points(seed, n, d)
    knn = knn_index(points, k, backend="brute")
    density = density_estimate(points, knn)
    graph = build_graph(points, knn, density, kind, theta)
    return Instance(points, knn, density, graph, build_merge_tree(graph))


def instance_grid(count: int, *, base_seed: int = 0) -> list[tuple[int, int, int, int, GraphKind]]:
    """Deterministic (seed, n, d, k, kind) tuples covering n in [20, 200]."""
    rng = np.random.default_rng(base_seed)
    grid = []
    for i in range(count):
        grid.append(
            (
                base_seed + i,
                int(rng.integers(20, 201)),
                int(rng.choice([1, 2, 5])),
                int(rng.choice([1, 3, 8])),
                GraphKind.KNN if i % 2 == 0 else GraphKind.MUTUAL,
            )
        )
    return grid


def probe_levels(values: np.ndarray, extra: Sequence[float] = ()) -> list[float]:
    """Every distinct value, the floats just around it, and the extremes."""
    distinct = np.unique(values)
    probes = set(distinct.tolist())
    probes.update(np.nextafter(distinct, np.inf).tolist())
    probes.update(np.nextafter(distinct, -np.inf).tolist())
    probes.update([0.0, float(distinct.max()) * 2.0])
    probes.update(extra)
    return sorted(probes)


@pytest.fixture
def path_graph() -> LevelGraph:
    """0 - 1 - 2 with f = [3, 1, 2]: two peaks joined through vertex 1."""
    return LevelGraph.from_edges(3, [(0, 1), (1, 2)], [3.0, 1.0, 2.0])


@pytest.fixture
def three_points() -> PointSet:
    return build_point_set([[0.0], [1.0], [3.0]])


@pytest.fixture
def small_instance() -> Instance:
    return make_instance(seed=7, n=120, d=2, k=5)
