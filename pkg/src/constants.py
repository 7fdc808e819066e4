import os

LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO").upper()

THREADS = int(os.environ.get("KNERF_THREADS", 1))
CHUNK_RAYS = int(os.environ.get("KNERF_CHUNK_RAYS", 256))

# Scene and camera conventions (generator world units)
NEAR = 2.0
FAR = 6.0
CAMERA_RADIUS = 4.0
SCENE_BOUND = 1.5

# Last sample distance so the final sample absorbs the remaining transmittance
DELTA_SENTINEL = 1e10

PSNR_CAP_DB = 99.0

CHECKPOINT_FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_MISSING_PREREQUISITE = 4
EXIT_CORRUPT_CHECKPOINT = 5
