"""Energy-optimal global DVFS for memory-bound multicore applications."""

from .model import (
    UNUSED,
    DeadlineProblem,
    EnergyBreakdown,
    FrequencyAssignment,
    InfeasibleDeadline,
    ParallelismVector,
    Platform,
    Task,
    TaskGraph,
    chip_power,
    completion_time,
    effective_cores,
    energy_per_cycle,
    total_energy,
)
from .optimizer import (
    NoInteriorMinimizer,
    OptimizationResult,
    RatioBounds,
    cubic_ratio,
    overload_limits,
    overload_ratio,
    ratio_bounds,
    ratio_relation_residual,
    reference_assignment,
    reference_energy,
    reference_frequency_dynamic,
    reference_frequency_total,
    solve_constrained,
    stationarity_polynomial,
    sweep_ratio_vs_overload,
    unconstrained_level_frequency,
)
from .scheduler import (
    Policy,
    Schedule,
    ScheduleMetrics,
    list_schedule,
    parallelism_vector,
    rank_schedules,
    schedule_metrics,
)

__version__ = "0.1.0"
