"""Time-series experiment harness."""

from .calibrate import Calibration, CalibrationConfig, calibrate_utilities
from .data import (
    DuplicateKeyError,
    IntervalRecord,
    MalformedRowError,
    NettingPeriod,
    NonMonotoneTimestampError,
    Panel,
    TimeseriesError,
    aggregate,
    find_gaps,
    load_timeseries,
    write_timeseries,
)
from .metrics import MonthlyReport, compute_gains, compute_rpf, rpf_series
from .scenario import ScenarioResult, run_scenario
from .synth import SyntheticConfig, generate_export_prices, generate_synthetic_scenario
from .tariff import ExportSeries, TouSchedule
