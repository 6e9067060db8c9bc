from trap_prisma.analytics.baseline import (
    baseline_success,
    baseline_success_logspace,
    largest_certain_target,
)
from trap_prisma.analytics.benchmark import (
    BenchmarkResult,
    InstanceComparison,
    benchmark_geometry,
    compare_instance,
    run_benchmark,
)
from trap_prisma.analytics.cycle_stats import CycleStatistics, cycle_statistics, empirical_cdf
from trap_prisma.analytics.sweeps import (
    LinearFit,
    SweepResult,
    TransitionCurve,
    baseline_surface,
    crossing,
    success_sweep,
    sweep_geometry,
    transition_curve,
)
from trap_prisma.analytics.threshold import (
    WaitTimeCurve,
    WaitTimePoint,
    raw_wait_time,
    threshold_optimizer,
    wait_time_at,
)
