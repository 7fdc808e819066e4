import logging
import sys
from pathlib import Path

from src.context.run_context import RunConfig
from src.datasets.blender import Split
from src.scenegen.emit import emit_dataset
from src.training.stages import derive_seed

logger = logging.getLogger("gen-scene-action")

_SPLIT_STREAM: dict[Split, int] = {"train": 0, "val": 1, "test": 2}
FULL_TRAIN_STREAM = 3


def split_seed(seed: int, state_index: int, split: Split) -> int:
    return derive_seed(seed, 100 + state_index, _SPLIT_STREAM[split])


class GenSceneAction:
    """Emit the datasets of both scene states."""

    def __init__(self, config: RunConfig):
        logger.info("Initializing Gen Scene Action")
        self.config = config

    def run(self) -> dict[str, Path]:
        logger.info(f"Generating datasets for scene {self.config.scene}")
        try:
            scene = self.config.load_scene()
            original, new = scene.states[0], scene.states[1]
            counts = self.config.views
            plan: list[tuple[int, str, Split, int]] = [
                (0, original, "train", counts.train_original),
                (1, new, "train", counts.train_new),
            ]
            for index, state in ((0, original), (1, new)):
                plan.append((index, state, "val", counts.val))
                plan.append((index, state, "test", counts.test))

            rows = []
            for index, state, split, n_views in plan:
                out_dir = self.config.dataset_dir(state)
                emit_dataset(
                    scene,
                    state,
                    n_views,
                    split_seed(self.config.seed, index, split),
                    out_dir,
                    split=split,
                    resolution=self.config.resolution,
                    camera_angle_x=self.config.camera_angle_x,
                    view_mode=self.config.view_mode,
                )
                rows.append(f"{state}\t{split}\t{n_views}\t{out_dir}")

            sys.stdout.write("state\tsplit\tviews\tdirectory\n" + "\n".join(rows) + "\n")
            return {state: self.config.dataset_dir(state) for state in (original, new)}

        except Exception as e:
            logger.critical(f"Unhandled exception in gen scene action: {e!s}", exc_info=True)
            raise
