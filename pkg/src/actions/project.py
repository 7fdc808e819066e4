import logging
import sys

from src.context.run_context import RunConfig
from src.training.persistence import load_fields
from src.training.stages import StageReport, load_stage_data, train_projection

logger = logging.getLogger("project-action")


class ProjectAction:
    """Stage 2: projection module on the new state's few views, fields frozen."""

    def __init__(self, config: RunConfig):
        logger.info("Initializing Project Action")
        self.config = config

    def run(self) -> StageReport:
        logger.info("Starting project action")
        try:
            cfg = self.config
            base, _ = load_fields(cfg.require_checkpoint("pretrain"))
            state = cfg.load_scene().states[1]
            data = load_stage_data(
                cfg.dataset_dir(state), cfg.train.precision, cfg.render.white_background
            )
            _, report = train_projection(
                base,
                data,
                cfg.training(),
                cfg.render,
                cfg.projection_arch,
                cfg.out,
                expected_views=cfg.views.train_new,
            )
            sys.stdout.write(f"project validation PSNR: {report.best_psnr} dB\n")
            return report

        except Exception as e:
            logger.critical(f"Unhandled exception in project action: {e!s}", exc_info=True)
            raise
