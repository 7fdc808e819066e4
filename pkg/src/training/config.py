from pydantic import BaseModel, ConfigDict, Field

from src.constants import CHUNK_RAYS, THREADS
from src.fields.radiance import Precision


class TrainConfig(BaseModel):
    """Optimizer, schedule and stage-length settings."""

    model_config = ConfigDict(extra="forbid")

    batch_rays: int = Field(default=1024, ge=1, description="Rays per iteration")
    iters_pretrain: int = Field(default=20000, ge=0, description="Stage-1 iterations")
    iters_projection: int = Field(default=8000, ge=0, description="Stage-2 iterations")
    iters_finetune: int = Field(default=4000, ge=0, description="Stage-3 iterations")
    base_lr: float = Field(default=5e-4, gt=0, description="Learning rate at iteration 0")
    betas: tuple[float, float] = Field(default=(0.9, 0.999), description="Adam decay rates")
    adam_eps: float = Field(default=1e-8, gt=0)
    decay_denominator: float = Field(
        default=250000, gt=0, description="Iterations per 10x learning-rate decay"
    )
    seed: int = Field(default=0, description="Root of every random stream")
    eval_every: int = Field(default=500, ge=1, description="Iterations between validations")
    regression_tolerance_db: float = Field(
        default=0.5, ge=0, description="Finetune stops when validation PSNR drops this far"
    )
    precision: Precision = Field(default="float32", description="Training arithmetic")
    chunk_rays: int = Field(default=CHUNK_RAYS, ge=1, description="Rays per parallel work item")
    threads: int = Field(default=THREADS, ge=1, description="Worker threads")
