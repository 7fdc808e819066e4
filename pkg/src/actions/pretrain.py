import logging
import sys

from src.context.run_context import RunConfig
from src.training.stages import StageReport, load_stage_data, pretrain

logger = logging.getLogger("pretrain-action")


class PretrainAction:
    """Stage 1 on the original state's abundant views."""

    def __init__(self, config: RunConfig):
        logger.info("Initializing Pretrain Action")
        self.config = config

    def run(self) -> StageReport:
        logger.info("Starting pretrain action")
        try:
            cfg = self.config
            state = cfg.load_scene().states[0]
            data = load_stage_data(
                cfg.dataset_dir(state), cfg.train.precision, cfg.render.white_background
            )
            _, report = pretrain(
                data, cfg.training(), cfg.render, cfg.field_arch, cfg.encoding, cfg.out
            )
            sys.stdout.write(f"pretrain validation PSNR: {report.best_psnr} dB\n")
            return report

        except Exception as e:
            logger.critical(f"Unhandled exception in pretrain action: {e!s}", exc_info=True)
            raise
