import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

from src.actions.baseline import BaselineAction
from src.actions.evaluate import EvaluateAction
from src.actions.finetune import FinetuneAction
from src.actions.gen_scene import GenSceneAction
from src.actions.pipeline import PipelineAction
from src.actions.pretrain import PretrainAction
from src.actions.project import ProjectAction
from src.actions.render import RenderAction
from src.constants import (
    EXIT_CONFIG,
    EXIT_CORRUPT_CHECKPOINT,
    EXIT_FAILURE,
    EXIT_IO,
    EXIT_MISSING_PREREQUISITE,
    EXIT_OK,
    LOG_LEVEL,
    THREADS,
)
from src.context.run_context import RunConfig, load_run_config
from src.errors import CheckpointError, ConfigError, MissingPrerequisiteError

# Configure logging
log_level = getattr(logging, LOG_LEVEL, logging.INFO)

# Configure root logger - this affects all loggers in the application
logging.basicConfig(
    level=log_level,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)

logger = logging.getLogger("knowledge-nerf")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--seed", type=int, help="Override the configured seed")
    common.add_argument("--out", type=Path, help="Override the output directory")
    common.add_argument("--views", type=int, help="Training views of the original state")
    common.add_argument("--iters", type=int, help="Iterations of the stage being run")
    common.add_argument(
        "--threads", type=int, help=f"Worker threads (default: KNERF_THREADS, now {THREADS})"
    )

    parser = argparse.ArgumentParser(
        prog="knerf", description="Few-view reconstruction of articulated objects"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-scene", parents=[common], help="Emit datasets of both scene states")
    sub.add_parser("pretrain", parents=[common], help="Stage 1: fit the original state")
    sub.add_parser("project", parents=[common], help="Stage 2: train the projection module")
    sub.add_parser("finetune", parents=[common], help="Stage 3: fine-tune everything")
    sub.add_parser("pipeline", parents=[common], help="Run the three stages in order")

    render = sub.add_parser("render", parents=[common], help="Render a checkpoint")
    render.add_argument("--checkpoint", type=Path, help="Default: the finetune checkpoint")
    render.add_argument("--orbit", type=int, help="Number of poses on an orbit")
    render.add_argument("--poses", type=Path, help="JSON list of 4x4 camera-to-world matrices")
    render.add_argument("--depth", action="store_true", help="Also write depth maps")

    evaluate = sub.add_parser("evaluate", parents=[common], help="Metrics on a test split")
    evaluate.add_argument("--checkpoint", type=Path, help="Default: the finetune checkpoint")
    evaluate.add_argument("--dataset", type=Path, help="Default: the new state's dataset")

    baseline = sub.add_parser("baseline", parents=[common], help="Comparison runs")
    baseline.add_argument("--kind", choices=["scratch", "nerf-ft", "full"], required=True)
    return parser


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, ConfigError | ValidationError):
        return EXIT_CONFIG
    if isinstance(error, MissingPrerequisiteError):
        return EXIT_MISSING_PREREQUISITE
    if isinstance(error, CheckpointError):
        return EXIT_CORRUPT_CHECKPOINT
    if isinstance(error, OSError):
        return EXIT_IO
    return EXIT_FAILURE


def dispatch(args: argparse.Namespace, config: RunConfig) -> None:
    if args.command == "gen-scene":
        GenSceneAction(config).run()
    elif args.command == "pretrain":
        PretrainAction(config).run()
    elif args.command == "project":
        ProjectAction(config).run()
    elif args.command == "finetune":
        FinetuneAction(config).run()
    elif args.command == "pipeline":
        PipelineAction(config).run()
    elif args.command == "render":
        RenderAction(config, args.checkpoint, args.orbit, args.poses, args.depth).run()
    elif args.command == "evaluate":
        EvaluateAction(config, args.checkpoint, args.dataset).run()
    elif args.command == "baseline":
        BaselineAction(config, args.kind).run()
    else:
        raise ConfigError(f"Unknown command: {args.command}")


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    try:
        config = load_run_config(args.config).with_overrides(
            command=args.command,
            seed=args.seed,
            out=args.out,
            views=args.views,
            iters=args.iters,
            threads=args.threads,
        )
        logger.info(f"Running {args.command} for scene {config.scene} into {config.out}")
        dispatch(args, config)
    except Exception as e:
        code = exit_code_for(e)
        logger.error(f"{args.command} failed with exit code {code}: {e!s}")
        return code

    logger.info(f"{args.command} completed successfully")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
