from importlib import reload

import numpy as np
import pytest

from src.context.run_context import RunConfig, ViewCounts
from src.fields.encoding import EncodingConfig
from src.fields.projection import ProjectionArch, init_projection_identity
from src.fields.radiance import FieldArch, init_radiance_field
from src.rendering.renderer import FieldSet, RenderOptions
from src.scenegen.builtin import hinge_box
from src.scenegen.emit import emit_dataset
from src.training.config import TrainConfig
from src.training.stages import load_stage_data

TINY_RESOLUTION = 16


@pytest.fixture
def reload_constants(monkeypatch):
    """Reload src.constants after the test so environment overrides do not leak."""
    import src.constants

    yield src.constants
    monkeypatch.undo()
    reload(src.constants)


@pytest.fixture
def tiny_arch():
    return FieldArch(depth=3, width=8, skip=2, view_width=8)


@pytest.fixture
def tiny_encoding():
    return EncodingConfig(levels_position=2, levels_direction=1, levels_projection=2)


@pytest.fixture
def tiny_projection_arch():
    return ProjectionArch(width=8)


@pytest.fixture
def make_fields(tiny_arch, tiny_encoding, tiny_projection_arch):
    """Factory for small field sets; the projection module is optional."""

    def build(
        seed: int = 0, precision: str = "float32", projection: bool = False
    ) -> FieldSet:
        proj = None
        if projection:
            proj = init_projection_identity(
                tiny_projection_arch, tiny_encoding, seed + 2, precision
            )
        return FieldSet(
            coarse=init_radiance_field(tiny_arch, tiny_encoding, seed, precision),
            fine=init_radiance_field(tiny_arch, tiny_encoding, seed + 1, precision),
            projection=proj,
            encoding=tiny_encoding,
        )

    return build


@pytest.fixture
def tiny_opts():
    return RenderOptions(n_coarse=8, n_fine=8)


@pytest.fixture
def tiny_train_cfg():
    return TrainConfig(
        batch_rays=64,
        iters_pretrain=4,
        iters_projection=3,
        iters_finetune=3,
        eval_every=2,
        chunk_rays=32,
        threads=1,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def hinge_datasets(tmp_path_factory):
    """Small hinge-box datasets: state_0 with 4 training views, state_1 with 5."""
    scene = hinge_box()
    root = tmp_path_factory.mktemp("hinge")
    plan = [
        ("state_0", "train", 4, 10),
        ("state_0", "val", 2, 11),
        ("state_0", "test", 2, 12),
        ("state_1", "train", 5, 20),
        ("state_1", "val", 2, 21),
        ("state_1", "test", 2, 22),
    ]
    for state, split, n_views, seed in plan:
        emit_dataset(
            scene, state, n_views, seed, root / state, split=split, resolution=TINY_RESOLUTION
        )
    return {"state_0": root / "state_0", "state_1": root / "state_1"}


@pytest.fixture(scope="session")
def original_data(hinge_datasets):
    return load_stage_data(hinge_datasets["state_0"])


@pytest.fixture(scope="session")
def few_view_data(hinge_datasets):
    return load_stage_data(hinge_datasets["state_1"])


@pytest.fixture
def tiny_run_config(tmp_path, tiny_arch, tiny_encoding, tiny_projection_arch):
    """A complete run small enough for end-to-end action tests."""
    return RunConfig(
        out=tmp_path / "run",
        resolution=TINY_RESOLUTION,
        views=ViewCounts(train_original=4, train_new=5, val=2, test=2, full_new=4),
        train=TrainConfig(
            batch_rays=32,
            iters_pretrain=2,
            iters_projection=2,
            iters_finetune=2,
            eval_every=1,
            chunk_rays=64,
            threads=1,
        ),
        render=RenderOptions(n_coarse=8, n_fine=4),
        field_arch=tiny_arch,
        projection_arch=tiny_projection_arch,
        encoding=tiny_encoding,
    )
