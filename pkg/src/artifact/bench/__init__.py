"""Benchmark harness: topology scenarios, metrics CSVs and the industry demo."""
from .config import Scenario, ScenarioConfig
from .industry import DemoLog, RobotSimulator, run_industry_demo
from .metrics import (
    CSV_HEADER,
    DeliveryCollector,
    MetricsRow,
    SweepPoint,
    emit_csv,
    rss_mb,
)
from .scenarios import BenchEnv, run_scenario1, run_scenario2, run_sweep

__all__ = [
    "BenchEnv",
    "CSV_HEADER",
    "DeliveryCollector",
    "DemoLog",
    "MetricsRow",
    "RobotSimulator",
    "Scenario",
    "ScenarioConfig",
    "SweepPoint",
    "emit_csv",
    "rss_mb",
    "run_industry_demo",
    "run_scenario1",
    "run_scenario2",
    "run_sweep",
]
