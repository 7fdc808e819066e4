import logging
import sys
from pathlib import Path

from src.context.run_context import RunConfig
from src.datasets.blender import load_dataset
from src.errors import ConfigError
from src.metrics.report import MetricReport, evaluate_images
from src.rendering.renderer import render_image
from src.training.batching import frame_cameras
from src.training.persistence import load_fields

logger = logging.getLogger("evaluate-action")


class EvaluateAction:
    """Metrics of a checkpoint on a dataset's test split."""

    def __init__(
        self, config: RunConfig, checkpoint: Path | None = None, dataset: Path | None = None
    ):
        logger.info("Initializing Evaluate Action")
        self.config = config
        self.checkpoint = checkpoint
        self.dataset = dataset

    def run(self) -> MetricReport:
        logger.info("Starting evaluate action")
        try:
            cfg = self.config
            dataset = self.dataset or cfg.dataset_dir(cfg.load_scene().states[1])
            manifest, images = load_dataset(dataset, "test", cfg.render.white_background)
            if not manifest.frames:
                raise ConfigError(f"Test split of {dataset} has no frames")

            checkpoint = self.checkpoint or cfg.require_checkpoint("finetune")
            fields, _ = load_fields(checkpoint)
            renders = [
                render_image(cam, fields, cfg.render, cfg.train.chunk_rays, cfg.train.threads)[0]
                for cam in frame_cameras(manifest, images)
            ]
            names = [Path(f.file_path).name for f in manifest.frames]
            report = evaluate_images(names, renders, images)

            table_path = cfg.out / "metrics" / f"{checkpoint.stem}_test.tsv"
            report.write(table_path)
            sys.stdout.write(report.table())
            logger.info(
                f"{checkpoint.stem}: PSNR {report.psnr:.3f} dB, SSIM {report.ssim:.4f} "
                f"over {len(names)} test views; table in {table_path}"
            )
            return report

        except Exception as e:
            logger.critical(f"Unhandled exception in evaluate action: {e!s}", exc_info=True)
            raise
