"""
The training stages and the shared optimization loop.

Stage 1 fits coarse and fine radiance fields to the abundant views of the
original state. Stage 2 freezes them and trains an identity-initialized
projection module on the few views of the new state. Stage 3 unfreezes
everything and fine-tunes jointly, keeping the best validation result.
The scratch and field-only runs are baselines for comparison.
"""

import logging
import math
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, Field

from src.datasets.blender import load_dataset
from src.diffcore.params import ParamSet, accumulate, copy_params, digest, with_prefix, zeros_like
from src.errors import (
    ContractViolation,
    KnerfError,
    NonFiniteGradientError,
    TrainingDivergedError,
)
from src.fields.encoding import EncodingConfig
from src.fields.projection import ProjectionArch, init_projection_identity
from src.fields.radiance import FieldArch, init_radiance_field
from src.rendering.camera import Rays
from src.rendering.renderer import (
    FieldSet,
    RenderOptions,
    chunk_slices,
    render_backward,
    render_rays,
)
from src.training.adam import AdamState, adam_step, lr_schedule
from src.training.batching import RayDataset, frame_cameras, sample_ray_batch
from src.training.config import TrainConfig
from src.training.evaluation import ValidationView, validation_psnr
from src.training.loss import mse_loss
from src.training.persistence import fields_to_params, save_fields

logger = logging.getLogger("knerf-training")

Stage = Literal["pretrain", "project", "finetune", "scratch", "full", "nerf-ft"]

# Independent random stream per stage
_STREAM: dict[str, int] = {
    "pretrain": 1,
    "project": 2,
    "finetune": 3,
    "scratch": 4,
    "full": 5,
    "nerf-ft": 6,
}

FEW_SHOT_VIEWS = 5


@dataclass
class StageData:
    train: RayDataset
    val: list[ValidationView] = field(default_factory=list)


def load_stage_data(
    directory: Path, precision: str = "float32", white_background: bool = True
) -> StageData:
    """Training rays and validation views of one dataset directory."""
    dtype = np.dtype(precision).type
    manifest, images = load_dataset(directory, "train", white_background)
    val_manifest, val_images = load_dataset(directory, "val", white_background)
    return StageData(
        train=RayDataset.from_split(manifest, images, dtype),
        val=list(zip(frame_cameras(val_manifest, val_images), val_images, strict=True)),
    )


class StageReport(BaseModel):
    stage: str
    start_iteration: int = Field(description="Global iteration at which the stage began")
    iterations: int = Field(default=0, description="Optimizer steps taken")
    losses: list[float] = Field(default_factory=list)
    val_iterations: list[int] = Field(default_factory=list)
    val_psnr: list[float] = Field(default_factory=list)
    best_iteration: int | None = None
    best_psnr: float | None = None
    stopped_early: bool = False
    seconds: float = 0.0
    checkpoint: str | None = None

    def key_values(self) -> dict[str, Any]:
        return {
            "stage": self.stage,
            "event": "report",
            "start_iteration": self.start_iteration,
            "iterations": self.iterations,
            "final_loss": self.losses[-1] if self.losses else None,
            "best_iteration": self.best_iteration,
            "best_psnr": self.best_psnr,
            "stopped_early": self.stopped_early,
            "seconds": round(self.seconds, 3),
            "checkpoint": self.checkpoint,
        }


class StageLog:
    """Append-only ``key=value`` event log of one stage."""

    def __init__(self, path: Path | None):
        self.path = path
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)

    def write(self, **values: Any) -> None:
        if self.path is None:
            return
        parts = []
        for key, value in values.items():
            if isinstance(value, float):
                value = f"{value:.8g}"
            parts.append(f"{key}={value}")
        with open(self.path, "a") as f:
            f.write(" ".join(parts) + "\n")


def stage_checkpoint(out_dir: Path, stage: str) -> Path:
    return Path(out_dir) / "checkpoints" / f"{stage}.ckpt"


def stage_log(out_dir: Path, stage: str) -> Path:
    return Path(out_dir) / "logs" / f"{stage}.log"


def derive_seed(seed: int, *tags: int) -> int:
    return int(np.random.SeedSequence([seed, *tags]).generate_state(1)[0])


def batch_gradient(
    fields: FieldSet,
    trainable: Sequence[str],
    rays: Rays,
    gt: np.ndarray,
    opts: RenderOptions,
    cfg: TrainConfig,
    stream: int,
    iteration: int,
) -> tuple[float, dict[str, ParamSet]]:
    """Loss and gradients of one batch, split into fixed ray chunks.

    Each chunk draws its sample jitter from its own generator and the chunk
    results are summed in chunk order, so the outcome does not depend on
    the number of threads.
    """
    n = len(rays)
    groups = fields.groups()

    def work(item: tuple[int, slice]) -> tuple[float, dict[str, ParamSet]]:
        k, index = item
        rng = np.random.default_rng([cfg.seed, stream, iteration, k])
        sub = rays.subset(index)
        result = render_rays(sub, fields, opts, rng, keep_cache=True)
        loss, d_coarse, d_fine = mse_loss(result.coarse_color, result.fine_color, gt[index])
        share = len(sub) / n
        grads = {g: zeros_like(groups[g]) for g in trainable}
        render_backward(fields, result, d_coarse * share, d_fine * share, grads)
        return loss * share, grads

    items = list(enumerate(chunk_slices(n, cfg.chunk_rays)))
    if cfg.threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(work, items))
    else:
        parts = [work(item) for item in items]

    total, grads = parts[0]
    for loss, chunk_grads in parts[1:]:
        total += loss
        for g in trainable:
            accumulate(grads[g], chunk_grads[g])
    return total, grads


def _flatten(groups: dict[str, ParamSet], names: Sequence[str]) -> ParamSet:
    flat: ParamSet = {}
    for g in names:
        flat.update(with_prefix(g, groups[g]))
    return flat


def run_stage(
    stage: Stage,
    fields: FieldSet,
    trainable: Sequence[str],
    data: StageData,
    iters: int,
    start_iteration: int,
    cfg: TrainConfig,
    opts: RenderOptions,
    out_dir: Path | None = None,
    eval_at_start: bool = False,
    early_stop: bool = False,
) -> tuple[FieldSet, StageReport]:
    """Optimize the ``trainable`` groups of ``fields`` in place.

    Validation runs every ``eval_every`` steps and after the last one; the
    best-scoring parameters are restored at the end and, with ``out_dir``,
    written to ``<out_dir>/checkpoints/<stage>.ckpt``. With ``early_stop``
    training ends as soon as validation PSNR falls more than
    ``regression_tolerance_db`` under the best seen.

    Raises:
        TrainingDivergedError: the loss, a gradient or an updated parameter became non-finite
        KnerfError: a frozen group changed between validation points
    """
    started = time.perf_counter()
    stream = _STREAM[stage]
    log = StageLog(stage_log(out_dir, stage) if out_dir else None)
    ckpt = stage_checkpoint(out_dir, stage) if out_dir else None
    report = StageReport(stage=stage, start_iteration=start_iteration)

    groups = fields.groups()
    params = _flatten(groups, trainable)
    frozen_names = [g for g in groups if g not in trainable]
    frozen_digest = digest(_flatten(groups, frozen_names)) if frozen_names else None
    state = AdamState.fresh(params)
    batch_rng = np.random.default_rng([cfg.seed, stream])
    best: ParamSet | None = None
    last_saved: str | None = None

    logger.info(
        f"Stage {stage}: {iters} iterations from global iteration {start_iteration}, "
        f"training {', '.join(trainable)} on {len(data.train)} rays "
        f"({data.train.n_images} images), {len(data.val)} validation views"
    )
    log.write(stage=stage, event="start", iteration=start_iteration, iters=iters, seed=cfg.seed)

    def check_frozen(it: int) -> None:
        if frozen_digest is not None and digest(_flatten(groups, frozen_names)) != frozen_digest:
            raise KnerfError(
                f"Stage {stage} modified frozen groups {frozen_names} by iteration {it}"
            )

    def evaluate(step: int) -> float:
        nonlocal best, last_saved
        it = start_iteration + step
        check_frozen(it)
        value = validation_psnr(fields, data.val, opts, cfg)
        report.val_iterations.append(it)
        report.val_psnr.append(value)
        log.write(stage=stage, event="validation", iteration=it, val_psnr=value)
        logger.info(f"Stage {stage} iteration {it}: validation PSNR {value:.3f} dB")
        if report.best_psnr is None or value > report.best_psnr:
            report.best_psnr = value
            report.best_iteration = it
            best = copy_params(fields_to_params(fields))
            if ckpt is not None:
                save_fields(fields, ckpt, {"stage": stage, "iteration": it, "seed": cfg.seed})
                last_saved = str(ckpt)
        return value

    if data.val and eval_at_start:
        evaluate(0)

    for step in range(iters):
        it = start_iteration + step
        rays, gt = sample_ray_batch(data.train, cfg.batch_rays, batch_rng)
        loss, grads = batch_gradient(fields, trainable, rays, gt, opts, cfg, stream, it)
        if not math.isfinite(loss):
            raise TrainingDivergedError(stage, it, last_saved)
        lr = lr_schedule(it, cfg)
        try:
            adam_step(params, _flatten(grads, trainable), state, lr, cfg)
        except NonFiniteGradientError as e:
            raise TrainingDivergedError(stage, it, last_saved) from e
        report.losses.append(loss)
        report.iterations = step + 1
        log.write(stage=stage, event="step", iteration=it, loss=loss, lr=lr)
        logger.debug(f"Stage {stage} iteration {it}: loss {loss:.6f} lr {lr:.3e}")

        if data.val and ((step + 1) % cfg.eval_every == 0 or step + 1 == iters):
            value = evaluate(step + 1)
            assert report.best_psnr is not None
            if early_stop and value < report.best_psnr - cfg.regression_tolerance_db:
                report.stopped_early = True
                logger.info(
                    f"Stage {stage}: validation PSNR {value:.3f} dB is more than "
                    f"{cfg.regression_tolerance_db} dB under the best "
                    f"{report.best_psnr:.3f} dB, stopping"
                )
                break

    check_frozen(start_iteration + report.iterations)

    if best is not None:
        current = fields_to_params(fields)
        for name, value in best.items():
            np.copyto(current[name], value)
    elif ckpt is not None:
        final = start_iteration + report.iterations
        save_fields(fields, ckpt, {"stage": stage, "iteration": final, "seed": cfg.seed})
        last_saved = str(ckpt)

    report.checkpoint = last_saved
    report.seconds = time.perf_counter() - started
    log.write(**report.key_values())
    logger.info(
        f"Stage {stage} finished after {report.iterations} iterations in {report.seconds:.1f}s"
        + (f", best validation PSNR {report.best_psnr:.3f} dB" if report.best_psnr else "")
    )
    return fields, report


def _new_fields(
    arch: FieldArch, encoding: EncodingConfig, cfg: TrainConfig, stream: int
) -> FieldSet:
    return FieldSet(
        coarse=init_radiance_field(arch, encoding, derive_seed(cfg.seed, stream, 0), cfg.precision),
        fine=init_radiance_field(arch, encoding, derive_seed(cfg.seed, stream, 1), cfg.precision),
        encoding=encoding,
    )


def pretrain(
    data: StageData,
    cfg: TrainConfig,
    opts: RenderOptions,
    arch: FieldArch | None = None,
    encoding: EncodingConfig | None = None,
    out_dir: Path | None = None,
) -> tuple[FieldSet, StageReport]:
    """Stage 1: coarse and fine fields from random init on the original state."""
    if data.train.n_images < 2:
        raise ContractViolation(f"Pretraining needs at least 2 views, got {data.train.n_images}")
    fields = _new_fields(
        arch or FieldArch(), encoding or EncodingConfig(), cfg, _STREAM["pretrain"]
    )
    return run_stage(
        "pretrain", fields, ("coarse", "fine"), data, cfg.iters_pretrain, 0, cfg, opts, out_dir
    )


def train_projection(
    base: FieldSet,
    data: StageData,
    cfg: TrainConfig,
    opts: RenderOptions,
    arch: ProjectionArch | None = None,
    out_dir: Path | None = None,
    expected_views: int | None = FEW_SHOT_VIEWS,
) -> tuple[FieldSet, StageReport]:
    """Stage 2: identity-initialized projection module, fields frozen.

    ``base`` is not modified; the returned set holds copies of its fields.
    """
    if expected_views is not None and data.train.n_images != expected_views:
        raise ContractViolation(
            f"Projection training expects exactly {expected_views} views, "
            f"got {data.train.n_images}"
        )
    dtype = np.dtype(cfg.precision).type
    projection = init_projection_identity(
        arch or ProjectionArch(),
        base.encoding,
        derive_seed(cfg.seed, _STREAM["project"]),
        cfg.precision,
    )
    fields = base.astype(dtype).model_copy(update={"projection": projection})
    return run_stage(
        "project",
        fields,
        ("projection",),
        data,
        cfg.iters_projection,
        cfg.iters_pretrain,
        cfg,
        opts,
        out_dir,
        eval_at_start=True,
    )


def finetune(
    fields: FieldSet,
    data: StageData,
    cfg: TrainConfig,
    opts: RenderOptions,
    out_dir: Path | None = None,
) -> tuple[FieldSet, StageReport]:
    """Stage 3: fields and projection jointly, continuing the global schedule.

    The stage-2 result competes as the iteration-0 candidate, so zero
    iterations return it unchanged and a regressing run falls back to it.
    """
    if fields.projection is None:
        raise ContractViolation("Finetuning needs a field set with a projection module")
    work = fields.astype(np.dtype(cfg.precision).type)
    return run_stage(
        "finetune",
        work,
        ("coarse", "fine", "projection"),
        data,
        cfg.iters_finetune,
        cfg.iters_pretrain + cfg.iters_projection,
        cfg,
        opts,
        out_dir,
        eval_at_start=True,
        early_stop=True,
    )


def train_scratch(
    data: StageData,
    cfg: TrainConfig,
    opts: RenderOptions,
    arch: FieldArch | None = None,
    encoding: EncodingConfig | None = None,
    iters: int | None = None,
    out_dir: Path | None = None,
    stage: Literal["scratch", "full"] = "scratch",
) -> tuple[FieldSet, StageReport]:
    """Baseline: a plain field pair from random init, ``iters_pretrain`` steps by default.

    ``stage`` names the run, so the few-view and the many-view baselines keep
    separate checkpoints, logs and random streams.
    """
    if data.train.n_images < 1:
        raise ContractViolation("Scratch training needs at least one view")
    fields = _new_fields(arch or FieldArch(), encoding or EncodingConfig(), cfg, _STREAM[stage])
    steps = cfg.iters_pretrain if iters is None else iters
    return run_stage(stage, fields, ("coarse", "fine"), data, steps, 0, cfg, opts, out_dir)


def finetune_field_only(
    base: FieldSet,
    data: StageData,
    cfg: TrainConfig,
    opts: RenderOptions,
    iters: int | None = None,
    out_dir: Path | None = None,
) -> tuple[FieldSet, StageReport]:
    """Baseline: tune the pretrained fields on the new views without a projection.

    Runs for the stage-2 plus stage-3 budget by default.
    """
    work = base.astype(np.dtype(cfg.precision).type).model_copy(update={"projection": None})
    steps = cfg.iters_projection + cfg.iters_finetune if iters is None else iters
    return run_stage(
        "nerf-ft",
        work,
        ("coarse", "fine"),
        data,
        steps,
        cfg.iters_pretrain,
        cfg,
        opts,
        out_dir,
        eval_at_start=True,
    )
