from rate_distortion_lab.monitoring.logger import configure_logging, get_logger
from rate_distortion_lab.monitoring.metrics import MetricsCollector, MetricsTimer, get_metrics

__all__ = ["configure_logging", "get_logger", "MetricsCollector", "MetricsTimer", "get_metrics"]
