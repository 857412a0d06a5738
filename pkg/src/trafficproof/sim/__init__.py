from .engine import (
    METRICS_HEADER,
    SimParams,
    SimResult,
    TickMetrics,
    hearing_set,
    load_params_file,
    metrics_csv_lines,
    plate_visible,
    run_simulation,
)
from .fit import DegenerateFit, fit_log, fit_report_lines
from .scenario import (
    BadParams,
    NonMonotonicTime,
    ParseError,
    Scenario,
    Tick,
    VehicleState,
    load_fcd,
    synth_scenario,
    write_fcd_csv,
)

__all__ = [
    "BadParams",
    "DegenerateFit",
    "METRICS_HEADER",
    "NonMonotonicTime",
    "ParseError",
    "Scenario",
    "SimParams",
    "SimResult",
    "Tick",
    "TickMetrics",
    "VehicleState",
    "fit_log",
    "fit_report_lines",
    "hearing_set",
    "load_fcd",
    "load_params_file",
    "metrics_csv_lines",
    "plate_visible",
    "run_simulation",
    "synth_scenario",
    "write_fcd_csv",
]
