import json
import logging
from pathlib import Path

import numpy as np

from src.constants import CAMERA_RADIUS, FAR, NEAR
from src.context.run_context import RunConfig
from src.datasets.images import write_gray_png, write_png
from src.errors import ConfigError
from src.rendering.camera import Camera, orbit_poses
from src.rendering.renderer import render_image
from src.training.persistence import load_fields

logger = logging.getLogger("render-action")


class RenderAction:
    """Render a checkpoint from explicit poses or an orbit."""

    def __init__(
        self,
        config: RunConfig,
        checkpoint: Path | None = None,
        orbit: int | None = None,
        poses: Path | None = None,
        depth: bool = False,
    ):
        logger.info("Initializing Render Action")
        self.config = config
        self.checkpoint = checkpoint
        self.orbit = orbit
        self.poses = poses
        self.depth = depth

    def camera_poses(self) -> list[np.ndarray]:
        if self.poses is not None:
            try:
                matrices = json.loads(Path(self.poses).read_text())
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"Cannot read poses from {self.poses}: {e!s}") from e
            return [np.asarray(m, dtype=np.float64) for m in matrices]
        if self.orbit is not None and self.orbit > 0:
            return orbit_poses(self.orbit, CAMERA_RADIUS)
        raise ConfigError("Nothing to render: give --orbit N or --poses FILE")

    def run(self) -> list[Path]:
        logger.info("Starting render action")
        try:
            cfg = self.config
            checkpoint = self.checkpoint or cfg.require_checkpoint("finetune")
            poses = self.camera_poses()
            fields, _ = load_fields(checkpoint)
            out_dir = cfg.out / "renders"
            out_dir.mkdir(parents=True, exist_ok=True)

            written = []
            for k, c2w in enumerate(poses):
                try:
                    cam = Camera(
                        width=cfg.resolution,
                        height=cfg.resolution,
                        camera_angle_x=cfg.camera_angle_x,
                        c2w=c2w,
                    )
                except ValueError as e:
                    raise ConfigError(f"Pose {k} is not a camera-to-world matrix: {e!s}") from e
                image, depth = render_image(
                    cam, fields, cfg.render, cfg.train.chunk_rays, cfg.train.threads
                )
                path = out_dir / f"render_{k:03d}.png"
                write_png(image, path)
                written.append(path)
                if self.depth:
                    write_gray_png((depth - NEAR) / (FAR - NEAR), out_dir / f"depth_{k:03d}.png")
            logger.info(f"Rendered {len(written)} views of {checkpoint} to {out_dir}")
            return written

        except Exception as e:
            logger.critical(f"Unhandled exception in render action: {e!s}", exc_info=True)
            raise
