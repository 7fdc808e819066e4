import logging
from pathlib import Path
from typing import Literal

from src.actions.evaluate import EvaluateAction
from src.actions.gen_scene import FULL_TRAIN_STREAM, split_seed
from src.context.run_context import RunConfig
from src.datasets.blender import manifest_path
from src.metrics.report import MetricReport
from src.scenegen.emit import emit_dataset
from src.training.persistence import load_fields
from src.training.stages import derive_seed, finetune_field_only, load_stage_data, train_scratch

logger = logging.getLogger("baseline-action")

BaselineKind = Literal["scratch", "nerf-ft", "full"]


class BaselineAction:
    """Comparison runs on the new state, evaluated on its test split.

    ``scratch`` trains from random init on the few new views, ``nerf-ft``
    tunes the pretrained fields on them without a projection module and
    ``full`` trains from random init on many views of the new state.
    """

    def __init__(self, config: RunConfig, kind: BaselineKind):
        logger.info(f"Initializing Baseline Action ({kind})")
        self.config = config
        self.kind = kind

    def _full_dataset(self, state: str) -> Path:
        cfg = self.config
        directory = cfg.out / "data" / f"{state}_full"
        if manifest_path(directory, "train").is_file():
            return directory
        scene = cfg.load_scene()
        emit = {
            "resolution": cfg.resolution,
            "camera_angle_x": cfg.camera_angle_x,
            "view_mode": cfg.view_mode,
        }
        emit_dataset(
            scene,
            state,
            cfg.views.full_new,
            derive_seed(cfg.seed, 101, FULL_TRAIN_STREAM),
            directory,
            "train",
            **emit,
        )
        # Same seed as the few-view validation split, so both runs validate on one set
        emit_dataset(
            scene, state, cfg.views.val, split_seed(cfg.seed, 1, "val"), directory, "val", **emit
        )
        return directory

    def run(self) -> MetricReport:
        logger.info(f"Starting baseline action ({self.kind})")
        try:
            cfg = self.config
            train = cfg.training()
            state = cfg.load_scene().states[1]
            budget = cfg.baseline_iters

            if self.kind == "nerf-ft":
                base, _ = load_fields(cfg.require_checkpoint("pretrain"))
                data = load_stage_data(
                    cfg.dataset_dir(state), train.precision, cfg.render.white_background
                )
                finetune_field_only(base, data, train, cfg.render, budget, cfg.out)
            else:
                few = self.kind == "scratch"
                directory = cfg.dataset_dir(state) if few else self._full_dataset(state)
                data = load_stage_data(directory, train.precision, cfg.render.white_background)
                if budget is None:
                    budget = train.iters_projection + train.iters_finetune if few else None
                train_scratch(
                    data,
                    train,
                    cfg.render,
                    cfg.field_arch,
                    cfg.encoding,
                    budget,
                    cfg.out,
                    stage="scratch" if few else "full",
                )

            return EvaluateAction(cfg, checkpoint=cfg.checkpoint(self.kind)).run()

        except Exception as e:
            logger.critical(f"Unhandled exception in baseline action: {e!s}", exc_info=True)
            raise
