import logging

from src.actions.finetune import FinetuneAction
from src.actions.gen_scene import GenSceneAction
from src.actions.pretrain import PretrainAction
from src.actions.project import ProjectAction
from src.context.run_context import RunConfig
from src.datasets.blender import manifest_path

logger = logging.getLogger("pipeline-action")


class PipelineAction:
    """Datasets (when missing) followed by the three stages, each through disk."""

    def __init__(self, config: RunConfig):
        logger.info("Initializing Pipeline Action")
        self.config = config

    def run(self) -> None:
        logger.info("Starting pipeline action")
        try:
            scene = self.config.load_scene()
            missing = [
                state
                for state in scene.states[:2]
                if not manifest_path(self.config.dataset_dir(state), "train").is_file()
            ]
            if missing:
                logger.info(f"No datasets for {missing}; generating them")
                GenSceneAction(self.config).run()

            PretrainAction(self.config).run()
            ProjectAction(self.config).run()
            FinetuneAction(self.config).run()
            logger.info(f"Pipeline finished; final checkpoint {self.config.checkpoint('finetune')}")

        except Exception as e:
            logger.critical(f"Unhandled exception in pipeline action: {e!s}", exc_info=True)
            raise
