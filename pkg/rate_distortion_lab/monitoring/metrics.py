"""
Solver metrics.

Counters written by the services:
  ba_solves_total, ba_iterations_total, ba_nonconverged_total   (ba_fixed_slope runs)
  bisection_steps_total, bisection_capped_total,
  timeshare_fallbacks_total                                      (solve_rd)
  sweep_failures_total                                           (sweep)
Histograms: ba_solve_seconds, solve_rd_seconds.
"""

import statistics
import time
from collections import defaultdict
from threading import Lock
from typing import Dict, List, Optional


class MetricsCollector:
    """
    Counters and bounded histograms behind one lock.

    Sweeps and reductions may run solves on worker threads, so every access
    goes through the lock.
    """

    MAX_HISTOGRAM_VALUES = 10000

    def __init__(self):
        self._lock = Lock()
        self._counters: Dict[str, int] = defaultdict(int)
        self._histograms: Dict[str, List[float]] = defaultdict(list)

    # ============= Counters =============

    def increment_counter(self, name: str, value: int = 1):
        with self._lock:
            self._counters[name] += value

    def get_counter(self, name: str) -> int:
        with self._lock:
            return self._counters.get(name, 0)

    # ============= Histograms =============

    def record_histogram(self, name: str, value: float):
        """Append a value; only the newest MAX_HISTOGRAM_VALUES are kept."""
        with self._lock:
            values = self._histograms[name]
            values.append(value)
            overflow = len(values) - self.MAX_HISTOGRAM_VALUES
            if overflow > 0:
                del values[:overflow]

    def get_histogram_stats(self, name: str) -> Optional[Dict[str, float]]:
        """count, min, max, mean, median, p50, p95, p99; None when nothing was recorded."""
        with self._lock:
            return _summarize(self._histograms.get(name, []))

    # ============= Reports =============

    def solver_summary(self) -> Dict[str, float]:
        """Derived figures for a run: iterations per solve and failure shares."""
        with self._lock:
            solves = self._counters.get("ba_solves_total", 0)
            iterations = self._counters.get("ba_iterations_total", 0)
            nonconverged = self._counters.get("ba_nonconverged_total", 0)
            return {
                "solves": solves,
                "mean_iterations_per_solve": iterations / solves if solves else 0.0,
                "nonconverged_share": nonconverged / solves if solves else 0.0,
                "bisection_steps": self._counters.get("bisection_steps_total", 0),
                "timeshare_fallbacks": self._counters.get("timeshare_fallbacks_total", 0),
                "sweep_failures": self._counters.get("sweep_failures_total", 0),
            }

    def get_all_metrics(self) -> Dict:
        with self._lock:
            histograms = {}
            for name, values in self._histograms.items():
                summary = _summarize(values)
                if summary is not None:
                    histograms[name] = summary
            counters = dict(self._counters)
        return {"counters": counters, "histograms": histograms, "solver": self.solver_summary()}

    def reset(self):
        with self._lock:
            self._counters.clear()
            self._histograms.clear()


def _percentile(sorted_values: List[float], fraction: float) -> float:
    # lower nearest rank
    return sorted_values[int((len(sorted_values) - 1) * fraction)]


def _summarize(values: List[float]) -> Optional[Dict[str, float]]:
    if not values:
        return None
    ordered = sorted(values)
    return {
        "count": len(ordered),
        "min": ordered[0],
        "max": ordered[-1],
        "mean": statistics.mean(ordered),
        "median": statistics.median(ordered),
        "p50": _percentile(ordered, 0.50),
        "p95": _percentile(ordered, 0.95),
        "p99": _percentile(ordered, 0.99),
    }


class MetricsTimer:
    """Record the wall-clock duration of a block, also when it raises."""

    def __init__(self, metrics: MetricsCollector, metric_name: str):
        self.metrics = metrics
        self.metric_name = metric_name
        self.start_time: Optional[float] = None

    def __enter__(self):
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.metrics.record_histogram(self.metric_name, time.perf_counter() - self.start_time)
        return False


_metrics_instance: Optional[MetricsCollector] = None
_instance_lock = Lock()


def get_metrics() -> MetricsCollector:
    """Process-wide collector shared by all services."""
    global _metrics_instance
    with _instance_lock:
        if _metrics_instance is None:
            _metrics_instance = MetricsCollector()
    return _metrics_instance
