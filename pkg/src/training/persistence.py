"""
Field sets to and from checkpoint files.

Tensors are stored with group prefixes (``coarse.``, ``fine.``,
``projection.``); network shapes and the encoding travel in the header.
"""

from pathlib import Path
from typing import Any

from pydantic import ValidationError

from src.datasets.checkpoint import load_checkpoint, save_checkpoint
from src.diffcore.params import ParamSet, strip_prefix, with_prefix
from src.errors import CheckpointError
from src.fields.encoding import EncodingConfig
from src.fields.projection import ProjectionArch, ProjectionParams
from src.fields.radiance import FieldArch, RadianceFieldParams
from src.rendering.renderer import FieldSet


def fields_to_params(fields: FieldSet) -> ParamSet:
    params: ParamSet = {}
    for group, tensors in fields.groups().items():
        params.update(with_prefix(group, tensors))
    return params


def save_fields(fields: FieldSet, path: Path, extra: dict[str, Any] | None = None) -> None:
    hyper: dict[str, Any] = {
        "field_arch": fields.coarse.arch.model_dump(),
        "encoding": fields.encoding.model_dump(),
        "pos_dim": fields.coarse.pos_dim,
        "dir_dim": fields.coarse.dir_dim,
    }
    if fields.projection is not None:
        hyper["projection_arch"] = fields.projection.arch.model_dump()
        hyper["projection_in_dim"] = fields.projection.in_dim
    hyper.update(extra or {})
    save_checkpoint(fields_to_params(fields), path, hyper)


def load_fields(path: Path) -> tuple[FieldSet, dict[str, Any]]:
    """Rebuild a FieldSet from a checkpoint written by ``save_fields``.

    Raises:
        CheckpointError: the file is corrupt or its tensors do not match the
            architecture recorded in its header
    """
    params, hyper = load_checkpoint(path)
    try:
        arch = FieldArch.model_validate(hyper["field_arch"])
        encoding = EncodingConfig.model_validate(hyper["encoding"])
        fields = {
            group: RadianceFieldParams(
                arch=arch,
                pos_dim=hyper["pos_dim"],
                dir_dim=hyper["dir_dim"],
                tensors=strip_prefix(group, params),
            )
            for group in ("coarse", "fine")
        }
        projection = None
        if "projection_arch" in hyper:
            projection = ProjectionParams(
                arch=ProjectionArch.model_validate(hyper["projection_arch"]),
                in_dim=hyper["projection_in_dim"],
                tensors=strip_prefix("projection", params),
            )
    except (KeyError, ValidationError) as e:
        raise CheckpointError(f"Checkpoint {path} does not describe a field set: {e!s}") from e
    fieldset = FieldSet(
        coarse=fields["coarse"], fine=fields["fine"], projection=projection, encoding=encoding
    )
    return fieldset, hyper
