import timeit
from dataclasses import dataclass, field

from pydantic import ValidationError

from app.core.errors import InputError
from app.core.logging import get_logger
from app.domain.clustertree import MergeTree, build_merge_tree
from app.domain.density import (
    DensityEstimate,
    density_estimate,
    knn_rule_k,
    suggest_epsilon_tilde,
)
from app.domain.geometry import KnnBackend, KnnIndex, PointSet, knn_index
from app.domain.graph import LevelGraph, build_graph
from app.domain.pruning import PrunedTree, prune
from app.domain.synth import sample
from app.repositories.points_csv import read_points_csv
from app.schemas.config import GraphKind, RunConfig
from app.schemas.mixture import MixtureSpec
from app.schemas.tree import RunSummary

logger = get_logger(__name__)


@dataclass(frozen=True)
class TreeBuild:
    points: PointSet
    knn: KnnIndex
    density: DensityEstimate
    graph: LevelGraph
    tree: MergeTree


@dataclass(frozen=True)
class PipelineResult:
    build: TreeBuild
    pruned: PrunedTree | None = None
    timings: dict[str, float] = field(default_factory=dict)

    def summary(self) -> RunSummary:
        build = self.build
        return RunSummary(
            n=build.points.n,
            d=build.points.d,
            k=build.knn.k,
            theta=build.graph.theta,
            graph=build.graph.kind.value,
            leaf_count=build.tree.forest.leaf_count(),
            max_f_n=build.density.f_max,
            merge_count=len(build.tree.merges),
            epsilon_tilde=self.pruned.epsilon_tilde if self.pruned else None,
            pruned_leaf_count=self.pruned.leaf_count if self.pruned else None,
        )


def build_tree(
    points: PointSet,
    k: int,
    *,
    theta: float = 1.0,
    graph: GraphKind = GraphKind.KNN,
    backend: KnnBackend | None = None,
) -> TreeBuild:
    """geometry -> density -> graph -> cluster tree for one sample."""
    knn = knn_index(points, k, backend=backend)
    density = density_estimate(points, knn)
    level_graph = build_graph(points, knn, density, graph, theta)
    tree = build_merge_tree(level_graph)
    return TreeBuild(points, knn, density, level_graph, tree)


def load_points(config: RunConfig) -> PointSet:
    if config.input_path is not None:
        return read_points_csv(config.input_path, skip_header=config.skip_header)

    assert config.mixture_path is not None and config.n is not None
    try:
        spec = MixtureSpec.from_json_file(config.mixture_path)
    except OSError as exc:
        raise InputError(
            f"Cannot read mixture spec '{config.mixture_path}': {exc}", kind="io"
        ) from exc
    except ValidationError as exc:
        raise InputError(
            f"Invalid mixture spec '{config.mixture_path}': {exc}", kind="invalid_spec"
        ) from exc
    return sample(spec, config.n, config.seed)


class PipelineService:
    """Runs the end-to-end pipeline for one RunConfig."""

    def __init__(self, backend: KnnBackend | None = None):
        self.backend = backend

    def run(self, config: RunConfig, *, with_pruning: bool = False) -> PipelineResult:
        timings: dict[str, float] = {}

        start = timeit.default_timer()
        points = load_points(config)
        timings["load"] = timeit.default_timer() - start

        k = config.k if config.k is not None else knn_rule_k(points.n, config.k_rule)
        logger.debug(
            "Running pipeline: n=%d, d=%d, k=%d, theta=%g, graph=%s",
            points.n,
            points.d,
            k,
            config.theta,
            config.graph.value,
        )

        start = timeit.default_timer()
        build = build_tree(
            points, k, theta=config.theta, graph=config.graph, backend=self.backend
        )
        timings["tree"] = timeit.default_timer() - start

        pruned = None
        if with_pruning:
            start = timeit.default_timer()
            eps = suggest_epsilon_tilde(
                config.epsilon, build.density.f_max, k, points.n
            )
            pruned = prune(build.tree, eps)
            timings["prune"] = timeit.default_timer() - start

        logger.info(
            "Pipeline finished in %.2f seconds (n=%d, leaves=%d%s)",
            sum(timings.values()),
            points.n,
            build.tree.forest.leaf_count(),
            f", pruned leaves={pruned.leaf_count}" if pruned else "",
        )
        return PipelineResult(build=build, pruned=pruned, timings=timings)


def get_pipeline_service(backend: KnnBackend | None = None) -> PipelineService:
    return PipelineService(backend=backend)
