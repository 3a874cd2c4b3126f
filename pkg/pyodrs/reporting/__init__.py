"""
报告模块：CSV导出、JSON运行记录与控制台输出
"""

from pyodrs.reporting.console_reporter import ConsoleReporter
from pyodrs.reporting.csv_exporter import (
    export_bounds_csv,
    export_controls_csv,
    export_fitness_history_csv,
    export_training_curve_csv,
    export_trajectory_csv,
    read_trajectory_csv,
)
from pyodrs.reporting.json_reporter import RunRecord, export_run_json, load_run_json

__all__ = [
    "ConsoleReporter",
    "export_bounds_csv",
    "export_controls_csv",
    "export_fitness_history_csv",
    "export_training_curve_csv",
    "export_trajectory_csv",
    "read_trajectory_csv",
    "RunRecord",
    "export_run_json",
    "load_run_json",
]
