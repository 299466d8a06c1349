import os
import sys

from loguru import logger


LOG_LEVEL = os.getenv("CSTAR_LOG_LEVEL", "WARNING")
LOG_FILE = os.getenv("CSTAR_LOG_FILE")
WORKERS = int(os.getenv("CSTAR_WORKERS", "1"))
SHOW_PROGRESS = os.getenv("CSTAR_PROGRESS", "0") not in ("0", "", "false", "False")

# Default numerical tolerances shared by the algebra and the checks
POSITIVITY_TOLERANCE = 1e-10
HERMITIAN_TOLERANCE = 1e-10
ZERO_NORM_THRESHOLD = 1e-12
POINT_EQUALITY_TOLERANCE = 1e-9
FIXED_POINT_TOLERANCE = 1e-9


# Routes loguru to stderr at the configured level and optionally to a file
# Called once by the CLI entry point; library code only calls logger.*
def setup_logging(level: str | None = None, log_file: str | None = None) -> None:
    logger.remove()
    logger.add(sys.stderr, level=(level or LOG_LEVEL).upper())

    target = log_file or LOG_FILE
    if target:
        logger.add(target, level="DEBUG")
        logger.info(f"Logging to '{target}'")
