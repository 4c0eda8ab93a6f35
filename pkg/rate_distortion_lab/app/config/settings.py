"""
Solver configuration read from the environment.

Values can be placed in a .env file at the working directory:
   RDLAB_TOLERANCE=1e-10
   RDLAB_MAX_ITERATIONS=100000
   RDLAB_LAMBDA_MAX=64
"""
import os

from dotenv import load_dotenv

load_dotenv()


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes")


class SolverSettings:
    """Defaults for SolverConfig and the command-line front end."""

    # Blahut-Arimoto stopping rule
    TOLERANCE: float = float(os.getenv("RDLAB_TOLERANCE", "1e-10"))
    MAX_ITERATIONS: int = int(os.getenv("RDLAB_MAX_ITERATIONS", "100000"))

    # Bisection bracket on the Lagrange multiplier
    LAMBDA_MIN: float = float(os.getenv("RDLAB_LAMBDA_MIN", "0"))
    LAMBDA_MAX: float = float(os.getenv("RDLAB_LAMBDA_MAX", "64"))
    LAMBDA_CAP: float = float(os.getenv("RDLAB_LAMBDA_CAP", str(2.0**20)))

    # Execution
    WORKERS: int = int(os.getenv("RDLAB_WORKERS", "1"))
    DEBUG_CHECKS: bool = _env_bool("RDLAB_DEBUG_CHECKS", "false")
    LOG_LEVEL: str = os.getenv("RDLAB_LOG_LEVEL", "WARNING")

    @classmethod
    def validate(cls) -> None:
        """Validate configuration and raise error if invalid"""
        if not cls.TOLERANCE > 0:
            raise ValueError("RDLAB_TOLERANCE must be positive")
        if cls.MAX_ITERATIONS < 1:
            raise ValueError("RDLAB_MAX_ITERATIONS must be at least 1")
        if not 0 <= cls.LAMBDA_MIN < cls.LAMBDA_MAX <= cls.LAMBDA_CAP:
            raise ValueError("need 0 <= RDLAB_LAMBDA_MIN < RDLAB_LAMBDA_MAX <= RDLAB_LAMBDA_CAP")
        if cls.WORKERS < 1:
            raise ValueError("RDLAB_WORKERS must be at least 1")
