from rate_distortion_lab.app.config.settings import SolverSettings

__all__ = ["SolverSettings"]
