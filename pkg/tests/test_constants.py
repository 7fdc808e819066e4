from importlib import reload

import pytest


# Test constants with environment variables set
@pytest.mark.parametrize(
    "env_var,constant,expected_value,raw_value",
    [
        ("LOG_LEVEL", "LOG_LEVEL", "DEBUG", "debug"),
        ("KNERF_THREADS", "THREADS", 8, "8"),
        ("KNERF_CHUNK_RAYS", "CHUNK_RAYS", 512, "512"),
    ],
)
def test_constants_from_env(
    env_var, constant, expected_value, raw_value, monkeypatch, reload_constants
):
    """Constants are read from the environment at import time."""
    monkeypatch.setenv(env_var, raw_value)

    constants = reload(reload_constants)

    assert getattr(constants, constant) == expected_value


@pytest.mark.parametrize(
    "env_var,constant,default_value",
    [
        ("LOG_LEVEL", "LOG_LEVEL", "INFO"),
        ("KNERF_THREADS", "THREADS", 1),
        ("KNERF_CHUNK_RAYS", "CHUNK_RAYS", 256),
    ],
)
def test_constants_defaults(env_var, constant, default_value, monkeypatch, reload_constants):
    """Constants fall back to their defaults when the variables are missing."""
    monkeypatch.delenv(env_var, raising=False)

    constants = reload(reload_constants)

    assert getattr(constants, constant) == default_value


def test_fixed_conventions():
    from src import constants

    assert constants.NEAR < constants.FAR
    assert constants.NEAR < constants.CAMERA_RADIUS < constants.FAR
    assert constants.DELTA_SENTINEL == 1e10
    assert constants.PSNR_CAP_DB == 99.0
    exit_codes = [
        constants.EXIT_OK,
        constants.EXIT_FAILURE,
        constants.EXIT_CONFIG,
        constants.EXIT_IO,
        constants.EXIT_MISSING_PREREQUISITE,
        constants.EXIT_CORRUPT_CHECKPOINT,
    ]
    assert exit_codes == [0, 1, 2, 3, 4, 5]
