from trap_prisma.simulation.loss import (
    batch_survival,
    charge_batch_loss,
    measure,
    sample_batch_loss,
    sample_exact_loading,
    sample_loading,
)
from trap_prisma.simulation.monte_carlo import (
    MonteCarloSummary,
    SimulationCallback,
    binomial_stderr,
    run_monte_carlo,
    survival_scan,
)
from trap_prisma.simulation.protocol import (
    StallDetector,
    TrialRecord,
    check_threshold,
    execute_sequence,
    run_trial,
)
from trap_prisma.simulation.rng import derive_trial_seed, set_seed, stream_rng, trial_rng
