import logging
import shutil
import sys

from src.context.run_context import RunConfig
from src.training.persistence import load_fields
from src.training.stages import StageReport, finetune, load_stage_data

logger = logging.getLogger("finetune-action")


class FinetuneAction:
    """Stage 3: joint fine-tuning of fields and projection."""

    def __init__(self, config: RunConfig):
        logger.info("Initializing Finetune Action")
        self.config = config

    def run(self) -> StageReport | None:
        logger.info("Starting finetune action")
        try:
            cfg = self.config
            source = cfg.require_checkpoint("project")
            target = cfg.checkpoint("finetune")
            if cfg.train.iters_finetune == 0:
                target.parent.mkdir(parents=True, exist_ok=True)
                shutil.copyfile(source, target)
                logger.info(f"No finetune iterations; copied {source} to {target}")
                return None

            fields, _ = load_fields(source)
            state = cfg.load_scene().states[1]
            data = load_stage_data(
                cfg.dataset_dir(state), cfg.train.precision, cfg.render.white_background
            )
            _, report = finetune(fields, data, cfg.training(), cfg.render, cfg.out)
            sys.stdout.write(f"finetune validation PSNR: {report.best_psnr} dB\n")
            return report

        except Exception as e:
            logger.critical(f"Unhandled exception in finetune action: {e!s}", exc_info=True)
            raise
