import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from src.errors import ConfigError, MissingPrerequisiteError
from src.fields.encoding import EncodingConfig
from src.fields.projection import ProjectionArch
from src.fields.radiance import FieldArch
from src.rendering.renderer import RenderOptions
from src.scenegen.builtin import get_scene
from src.scenegen.emit import DEFAULT_CAMERA_ANGLE_X, ViewMode
from src.scenegen.scene import ArticulatedScene
from src.training.config import TrainConfig

# Subcommand -> TrainConfig field set by --iters
_STAGE_ITERS = {
    "pretrain": ("iters_pretrain",),
    "project": ("iters_projection",),
    "finetune": ("iters_finetune",),
    "pipeline": ("iters_pretrain", "iters_projection", "iters_finetune"),
}


class ViewCounts(BaseModel):
    model_config = ConfigDict(extra="forbid")

    train_original: int = Field(
        default=60, ge=2, description="Training views of the original state"
    )
    train_new: int = Field(default=5, ge=1, description="Training views of the new state")
    val: int = Field(default=8, ge=1, description="Validation views per state")
    test: int = Field(default=8, ge=1, description="Test views per state")
    full_new: int = Field(
        default=60, ge=1, description="Views of the new state for the full-data baseline"
    )


class RunConfig(BaseModel):
    """Everything one run needs; loaded from JSON, then overridden by flags."""

    model_config = ConfigDict(extra="forbid")

    scene: str = Field(default="hinge-box", description="Builtin scene name or scene file path")
    out: Path = Field(default=Path("runs/knerf"), description="Output directory")
    data_dirs: dict[str, Path] = Field(
        default_factory=dict, description="Dataset directory per state; default <out>/data/<state>"
    )
    seed: int = Field(default=0, description="Single source of randomness")
    resolution: int = Field(default=64, ge=1, description="Rendered image width and height")
    camera_angle_x: float = Field(default=DEFAULT_CAMERA_ANGLE_X, gt=0)
    view_mode: ViewMode = Field(default="hemisphere", description="Camera placement for emission")
    views: ViewCounts = Field(default_factory=ViewCounts)
    train: TrainConfig = Field(default_factory=TrainConfig)
    render: RenderOptions = Field(default_factory=RenderOptions)
    field_arch: FieldArch = Field(default_factory=FieldArch)
    projection_arch: ProjectionArch = Field(default_factory=ProjectionArch)
    encoding: EncodingConfig = Field(default_factory=EncodingConfig)
    baseline_iters: int | None = Field(
        default=None, ge=0, description="Baseline budget; default depends on the baseline kind"
    )

    def training(self) -> TrainConfig:
        """TrainConfig with the run seed."""
        return self.train.model_copy(update={"seed": self.seed})

    def load_scene(self) -> ArticulatedScene:
        return get_scene(self.scene)

    def dataset_dir(self, state: str) -> Path:
        return self.data_dirs.get(state, self.out / "data" / state)

    def checkpoint(self, stage: str) -> Path:
        return self.out / "checkpoints" / f"{stage}.ckpt"

    def require_checkpoint(self, stage: str) -> Path:
        path = self.checkpoint(stage)
        if not path.is_file():
            raise MissingPrerequisiteError(stage, str(path))
        return path

    def with_overrides(
        self,
        command: str | None = None,
        seed: int | None = None,
        out: Path | None = None,
        views: int | None = None,
        iters: int | None = None,
        threads: int | None = None,
    ) -> "RunConfig":
        """Apply command-line flags; a flag always wins over the file."""
        data: dict[str, Any] = self.model_dump()
        if seed is not None:
            data["seed"] = seed
        if out is not None:
            data["out"] = out
        if views is not None:
            data["views"]["train_original"] = views
        if threads is not None:
            data["train"]["threads"] = threads
        if iters is not None:
            if command == "baseline":
                data["baseline_iters"] = iters
            else:
                keys = _STAGE_ITERS.get(command or "")
                if keys is None:
                    raise ConfigError(f"--iters has no meaning for {command}")
                for key in keys:
                    data["train"][key] = iters
        return RunConfig.model_validate(data)


def load_run_config(path: Path | None) -> RunConfig:
    """Read a JSON run configuration; ``None`` gives the defaults.

    Raises:
        ConfigError: the file is missing or is not JSON
        pydantic.ValidationError: a value is invalid or a key unknown
    """
    if path is None:
        return RunConfig()
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e!s}") from e
    return RunConfig.model_validate(raw)
