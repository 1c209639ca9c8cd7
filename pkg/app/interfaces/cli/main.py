import argparse
import sys
from collections.abc import Sequence
from pathlib import Path

import orjson
from pydantic import ValidationError

from app.core.config import get_settings
from app.core.errors import InputError, ParameterError
from app.core.logging import get_logger
from app.repositories.exports import (
    dump_json,
    write_edges_csv,
    write_leaves_csv,
    write_tree_json,
)
from app.schemas.config import EpsilonMode, GraphKind, RunConfig
from app.services.experiment_service import EXPERIMENTS, get_experiment_service
from app.services.pipeline_service import PipelineResult, get_pipeline_service

logger = get_logger("interfaces.cli")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PARAMETER = 3


def _add_run_arguments(parser: argparse.ArgumentParser, *, pruning: bool) -> None:
    settings = get_settings()

    source = parser.add_argument_group("input")
    source.add_argument("--input", type=Path, help="CSV file with one point per row.")
    source.add_argument("--skip-header", action="store_true")
    source.add_argument("--mixture", type=Path, help="Mixture spec JSON to sample from.")
    source.add_argument("--n", type=int, help="Sample size for --mixture.")
    source.add_argument("--seed", type=int, default=0)

    knn = parser.add_mutually_exclusive_group()
    knn.add_argument("--k", type=int)
    knn.add_argument("--k-rule", choices=["logn15", "n04"])

    parser.add_argument("--theta", type=float, default=settings.default_theta)
    parser.add_argument(
        "--graph",
        choices=[kind.value for kind in GraphKind],
        default=settings.default_graph_kind.value,
    )
    parser.add_argument(
        "--backend", choices=["brute", "kdtree"], default=settings.knn_backend
    )
    if pruning:
        parser.add_argument(
            "--epsilon",
            default="fsqrtk",
            help="fixed:V, fsqrtk, f4sqrtk or theory[:DELTA] (default: fsqrtk).",
        )

    output = parser.add_argument_group("output")
    output.add_argument("--out", type=Path, help="Tree JSON path.")
    output.add_argument("--edges", type=Path, help="Graph edge list CSV path.")
    output.add_argument("--leaves", type=Path, help="Leaf summary CSV path.")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knntree",
        description="k-NN density cluster trees with epsilon-tilde pruning.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    tree = commands.add_parser("tree", help="Build the empirical cluster tree.")
    _add_run_arguments(tree, pruning=False)

    prune = commands.add_parser("prune", help="Build and prune the cluster tree.")
    _add_run_arguments(prune, pruning=True)

    modes = commands.add_parser("modes", help="Print the pruned leaf count only.")
    _add_run_arguments(modes, pruning=True)

    experiment = commands.add_parser("experiment", help="Run a mode-recovery experiment.")
    experiment.add_argument("name", choices=EXPERIMENTS)
    experiment.add_argument("--seeds", type=int)
    experiment.add_argument("--base-seed", type=int)
    experiment.add_argument("--out", type=Path, help="Rows CSV; means go next to it.")
    experiment.add_argument(
        "--backend", choices=["brute", "kdtree"], default=get_settings().knn_backend
    )
    return parser


def _parse_epsilon(text: str) -> EpsilonMode:
    if text.strip().lower() == "theory":
        text = f"theory:{get_settings().default_delta}"
    return EpsilonMode.parse(text)


def _run_config(args: argparse.Namespace) -> RunConfig:
    epsilon = getattr(args, "epsilon", None)
    return RunConfig(
        input_path=args.input,
        skip_header=args.skip_header,
        mixture_path=args.mixture,
        n=args.n,
        seed=args.seed,
        k=args.k,
        k_rule=args.k_rule,
        theta=args.theta,
        graph=GraphKind(args.graph),
        epsilon=_parse_epsilon(epsilon) if epsilon is not None else EpsilonMode.fixed(0.0),
        out=args.out,
        edges_out=args.edges,
        leaves_out=args.leaves,
    )


def _write_outputs(config: RunConfig, result: PipelineResult) -> None:
    forest = result.pruned.forest if result.pruned else result.build.tree.forest
    if config.out is not None:
        eps = result.pruned.epsilon_tilde if result.pruned else None
        write_tree_json(config.out, forest.to_document(eps))
    if config.edges_out is not None:
        write_edges_csv(config.edges_out, result.build.graph.edges())
    if config.leaves_out is not None:
        write_leaves_csv(config.leaves_out, (leaf.to_record() for leaf in forest.leaves()))


def _emit(payload: bytes) -> None:
    sys.stdout.buffer.write(payload)
    sys.stdout.flush()


def cmd_tree(args: argparse.Namespace) -> int:
    config = _run_config(args)
    result = get_pipeline_service(args.backend).run(config)
    _write_outputs(config, result)
    _emit(dump_json(result.summary()))
    return EXIT_OK


def cmd_prune(args: argparse.Namespace) -> int:
    config = _run_config(args)
    result = get_pipeline_service(args.backend).run(config, with_pruning=True)
    _write_outputs(config, result)
    if args.command == "modes":
        _emit(orjson.dumps(result.pruned.leaf_count, option=orjson.OPT_APPEND_NEWLINE))
    else:
        _emit(dump_json(result.summary()))
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    service = get_experiment_service(args.backend)
    result = service.run(args.name, seeds=args.seeds, base_seed=args.base_seed, out=args.out)
    payload = {
        "experiment": result.name,
        "rows": len(result.rows),
        "means": [mean.model_dump(mode="json") for mean in result.means],
    }
    _emit(
        orjson.dumps(
            payload,
            option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_APPEND_NEWLINE,
        )
    )
    return EXIT_OK


COMMANDS = {
    "tree": cmd_tree,
    "prune": cmd_prune,
    "modes": cmd_prune,
    "experiment": cmd_experiment,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT

    try:
        return COMMANDS[args.command](args)
    except (InputError, OSError) as exc:
        logger.error("Input error: %s", exc)
        return EXIT_INPUT
    except (ParameterError, ValidationError) as exc:
        logger.error("Parameter error: %s", exc)
        return EXIT_PARAMETER
