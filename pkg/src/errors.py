"""
Exception hierarchy shared by every subpackage.
"""


class KnerfError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(KnerfError, ValueError):
    """Arguments do not satisfy an operation's preconditions."""


class GradientCheckError(KnerfError):
    """A finite-difference evaluation produced a non-finite value."""

    def __init__(self, param_name: str, index: int, message: str):
        super().__init__(f"{message} (parameter {param_name}[{index}])")
        self.param_name = param_name
        self.index = index


class NonFiniteGradientError(KnerfError):
    """An optimizer step received NaN or Inf gradients."""

    def __init__(self, tensor_name: str):
        super().__init__(f"Non-finite gradient in tensor {tensor_name}")
        self.tensor_name = tensor_name


class NonFiniteParameterError(NonFiniteGradientError):
    """An optimizer step would have written NaN or Inf into a parameter."""

    def __init__(self, tensor_name: str):
        KnerfError.__init__(self, f"Non-finite parameter after update in tensor {tensor_name}")
        self.tensor_name = tensor_name


class TrainingDivergedError(KnerfError):
    """Loss became non-finite; the last finite checkpoint is kept on disk."""

    def __init__(self, stage: str, iteration: int, checkpoint_path: str | None):
        super().__init__(
            f"Stage {stage} diverged at iteration {iteration}; "
            f"last finite checkpoint: {checkpoint_path}"
        )
        self.stage = stage
        self.iteration = iteration
        self.checkpoint_path = checkpoint_path


class CorrespondenceError(KnerfError):
    """A point lies inside more than one rigid part."""


class DatasetError(KnerfError, OSError):
    """A dataset directory is missing files or is malformed."""


class CheckpointError(KnerfError):
    """A checkpoint file is truncated, has a wrong version or inconsistent shapes."""


class MetricError(KnerfError, ValueError):
    """Images cannot be compared."""


class ConfigError(KnerfError):
    """The run configuration is invalid."""


class MissingPrerequisiteError(KnerfError):
    """A stage was started without the checkpoint of the stage it depends on."""

    def __init__(self, required_stage: str, path: str):
        super().__init__(
            f"Missing {required_stage} checkpoint at {path}; run {required_stage} first"
        )
        self.required_stage = required_stage
        self.path = path
