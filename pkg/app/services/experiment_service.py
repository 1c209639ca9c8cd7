"""Mode-recovery experiments on seeded Gaussian mixtures.

- fig2: two-mode 2-D mixture, n=500, k=12, theta=1, epsilon_tilde = F/sqrt(k)
  with F the run's own max f_n.
- fig3_left: five-mode mixture in d=7, n=500, k=(ln n)^1.5, both graph kinds,
  epsilon_tilde swept over an even grid on [0, span * F/sqrt(k)], F the max
  f_n over the seed batch.
- fig3_right: same mixture, epsilon_tilde = F/(4 sqrt(k)) with batch F, n
  swept over a grid.
"""

import math
import timeit
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.core.config import get_settings
from app.core.errors import ParameterError
from app.core.logging import get_logger
from app.domain.clustertree import build_merge_tree
from app.domain.density import density_estimate, knn_rule_k, level_counts
from app.domain.geometry import KnnBackend, knn_index
from app.domain.graph import build_graph
from app.domain.pruning import prune
from app.domain.synth import five_mode_mixture, sample, true_density, two_mode_mixture
from app.repositories.exports import write_records_csv
from app.schemas.config import ExperimentOptions, GraphKind
from app.schemas.mixture import MixtureSpec
from app.services.pipeline_service import TreeBuild, build_tree

logger = get_logger(__name__)

EXPERIMENTS: tuple[str, ...] = ("fig2", "fig3_left", "fig3_right")

FIG2_N = 500
FIG2_K = 12
FIG3_N = 500
FIG3_D = 7


class ExperimentRow(BaseModel):
    experiment: str
    config: str
    graph: str
    seed: int
    n: int
    d: int
    k: int
    theta: float
    F: float
    epsilon_tilde: float
    leaf_count: int
    level_counts: tuple[int, ...] | None = None

    model_config = ConfigDict(frozen=True)


class ExperimentMean(BaseModel):
    experiment: str
    config: str
    graph: str
    n: int
    k: int
    epsilon_tilde: float
    seeds: int
    mean_leaf_count: float

    model_config = ConfigDict(frozen=True)


@dataclass(frozen=True)
class ExperimentResult:
    name: str
    rows: tuple[ExperimentRow, ...]
    means: tuple[ExperimentMean, ...]

    def mean_for(self, config: str, graph: str) -> float:
        for mean in self.means:
            if mean.config == config and mean.graph == graph:
                return mean.mean_leaf_count
        raise KeyError(f"No mean recorded for config '{config}' graph '{graph}'.")


class ExperimentService:
    """Runs the mode-recovery experiments; seeds are built in parallel."""

    def __init__(
        self,
        options: ExperimentOptions | None = None,
        *,
        max_workers: int | None = None,
        backend: KnnBackend | None = None,
    ):
        settings = get_settings()
        self.options = options or settings.experiment_options
        self.max_workers = max_workers or settings.max_workers
        self.backend = backend

    def run(
        self,
        name: str,
        *,
        seeds: int | None = None,
        base_seed: int | None = None,
        out: Path | None = None,
    ) -> ExperimentResult:
        runners: dict[str, Callable[[list[int]], list[ExperimentRow]]] = {
            "fig2": self.fig2,
            "fig3_left": self.fig3_left,
            "fig3_right": self.fig3_right,
        }
        try:
            runner = runners[name]
        except KeyError as exc:
            available = ", ".join(EXPERIMENTS)
            raise ParameterError(
                f"Unknown experiment '{name}'. Available: {available}"
            ) from exc

        count = seeds if seeds is not None else self.options.default_seeds
        if count < 1:
            raise ParameterError(f"Need at least one seed, got {count}.")
        first = base_seed if base_seed is not None else self.options.base_seed
        seed_list = list(range(first, first + count))

        start = timeit.default_timer()
        rows = sorted(runner(seed_list), key=lambda r: (r.config, r.graph, r.seed))
        result = ExperimentResult(name=name, rows=tuple(rows), means=_means(rows))
        logger.info(
            "Experiment '%s' finished in %.2f seconds (%d rows over %d seeds)",
            name,
            timeit.default_timer() - start,
            len(rows),
            count,
        )

        if out is not None:
            write_experiment_csv(out, result)
        return result

    def fig2(self, seeds: Sequence[int]) -> list[ExperimentRow]:
        spec = two_mode_mixture()
        builds = self._build_batch(
            lambda seed: build_tree(
                sample(spec, FIG2_N, seed), FIG2_K, backend=self.backend
            ),
            seeds,
        )
        unit = fig2_level_unit(spec, self.options)
        rows = []
        for seed, build in zip(seeds, builds):
            F = build.density.f_max
            eps = F / math.sqrt(FIG2_K)
            counts = level_counts(
                build.density, [level * unit for level in self.options.fig2_levels]
            )
            rows.append(
                _row("fig2", "fig2", build, seed, F, eps, prune(build.tree, eps).leaf_count)
                .model_copy(update={"level_counts": tuple(counts)})
            )
        return rows

    def fig3_left(self, seeds: Sequence[int]) -> list[ExperimentRow]:
        spec = five_mode_mixture(FIG3_D)
        k = knn_rule_k(FIG3_N, "logn15")
        batches = self._build_both_kinds(spec, FIG3_N, k, seeds)

        F = max(build.density.f_max for build in batches[GraphKind.KNN])
        top = self.options.fig3_left_grid_span * F / math.sqrt(k)
        grid = np.linspace(0.0, top, self.options.fig3_left_grid_size).tolist()

        rows = []
        for builds in batches.values():
            for seed, build in zip(seeds, builds):
                for idx, eps in enumerate(grid):
                    leaf_count = prune(build.tree, eps).leaf_count
                    rows.append(
                        _row("fig3_left", f"eps[{idx:02d}]", build, seed, F, eps, leaf_count)
                    )
        return rows

    def fig3_right(self, seeds: Sequence[int]) -> list[ExperimentRow]:
        spec = five_mode_mixture(FIG3_D)
        rows = []
        for n in self.options.fig3_right_ns:
            k = knn_rule_k(n, "logn15")
            batches = self._build_both_kinds(spec, n, k, seeds)
            F = max(build.density.f_max for build in batches[GraphKind.KNN])
            eps = F / (4.0 * math.sqrt(k))
            for builds in batches.values():
                for seed, build in zip(seeds, builds):
                    leaf_count = prune(build.tree, eps).leaf_count
                    rows.append(
                        _row("fig3_right", f"n={n:06d}", build, seed, F, eps, leaf_count)
                    )
        return rows

    def _build_both_kinds(
        self, spec: MixtureSpec, n: int, k: int, seeds: Sequence[int]
    ) -> dict[GraphKind, list[TreeBuild]]:
        """One sample and density per seed, with a tree for each graph kind."""

        def build_pair(seed: int) -> tuple[TreeBuild, TreeBuild]:
            points = sample(spec, n, seed)
            knn = knn_index(points, k, backend=self.backend)
            density = density_estimate(points, knn)
            pair = []
            for kind in (GraphKind.KNN, GraphKind.MUTUAL):
                graph = build_graph(points, knn, density, kind, 1.0)
                pair.append(TreeBuild(points, knn, density, graph, build_merge_tree(graph)))
            return pair[0], pair[1]

        pairs = self._build_batch(build_pair, seeds)
        return {
            GraphKind.KNN: [pair[0] for pair in pairs],
            GraphKind.MUTUAL: [pair[1] for pair in pairs],
        }

    def _build_batch(self, build: Callable[[int], object], seeds: Sequence[int]) -> list:
        workers = min(self.max_workers, len(seeds))
        if workers <= 1:
            return [build(seed) for seed in seeds]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(build, seeds))


def _row(
    experiment: str,
    config: str,
    build: TreeBuild,
    seed: int,
    F: float,
    eps: float,
    leaf_count: int,
) -> ExperimentRow:
    return ExperimentRow(
        experiment=experiment,
        config=config,
        graph=build.graph.kind.value,
        seed=seed,
        n=build.points.n,
        d=build.points.d,
        k=build.knn.k,
        theta=build.graph.theta,
        F=F,
        epsilon_tilde=eps,
        leaf_count=leaf_count,
    )


def _means(rows: Sequence[ExperimentRow]) -> tuple[ExperimentMean, ...]:
    grouped: dict[tuple[str, str], list[ExperimentRow]] = {}
    for row in rows:
        grouped.setdefault((row.config, row.graph), []).append(row)
    return tuple(
        ExperimentMean(
            experiment=group[0].experiment,
            config=config,
            graph=graph,
            n=group[0].n,
            k=group[0].k,
            epsilon_tilde=group[0].epsilon_tilde,
            seeds=len(group),
            mean_leaf_count=fmean(r.leaf_count for r in group),
        )
        for (config, graph), group in sorted(grouped.items())
    )


def fig2_level_unit(spec: MixtureSpec, options: ExperimentOptions) -> float:
    """f_n value of one diagnostic level unit for the two-mode mixture.

    For equal-weight, unit-variance components far apart, the mixture mass
    above density t is 1 - t / peak. The unit puts the first diagnostic level
    at the density whose superlevel set carries `fig2_first_level_mass`.
    """
    peak = float(np.max(true_density(spec, [c.mean for c in spec.components])))
    return peak * (1.0 - options.fig2_first_level_mass) / options.fig2_levels[0]


def means_path(out: Path) -> Path:
    return out.with_name(f"{out.stem}_means{out.suffix or '.csv'}")


def write_experiment_csv(out: Path, result: ExperimentResult) -> None:
    write_records_csv(out, result.rows, fields=list(ExperimentRow.model_fields))
    write_records_csv(
        means_path(out), result.means, fields=list(ExperimentMean.model_fields)
    )


def get_experiment_service(backend: KnnBackend | None = None) -> ExperimentService:
    return ExperimentService(backend=backend)
