"""Energy-aware hyperparameter search: successive halving over batch size with
cyclical learning-rate exploration on a simulated accelerator."""

from ._sm2 import (
    ArgumentError,
    ComparisonError,
    ConfigError,
    Error,
    IoError,
    MeasurementError,
    ParseError,
    RunAborted,
    SimPowerModel,
    compare,
    compare_totals,
    energy_per_epoch,
    ledger_summary,
    loss_curvature,
    lr_grid,
    objective_score,
    run,
    select_stable_lr,
    validate,
)

__all__ = [
    "ArgumentError",
    "ComparisonError",
    "ConfigError",
    "Error",
    "IoError",
    "MeasurementError",
    "ParseError",
    "RunAborted",
    "SimPowerModel",
    "compare",
    "compare_totals",
    "energy_per_epoch",
    "ledger_summary",
    "loss_curvature",
    "lr_grid",
    "objective_score",
    "run",
    "select_stable_lr",
    "validate",
]
