from trap_prisma.solvers.chain_exact import (
    ChainLocator,
    ChainPlan,
    ChainProblem,
    plan_to_sequence,
    solve_chain,
)
from trap_prisma.solvers.mwpm import (
    AssignmentProblem,
    Matching,
    RoutingReport,
    mwpm_cycle,
    mwpm_plan,
    route_matching,
    solve_mwpm,
)
from trap_prisma.solvers.planner_dictionary import planner_dict
from trap_prisma.solvers.redrec import (
    ColumnClass,
    ColumnLedger,
    DonorLabeling,
    RedRecReport,
    assign_open_rows,
    classify_columns,
    label_donor,
    open_rows,
    pair_columns,
    reconfigure_column,
    redrec_cycle,
    redrec_plan,
    streamlined_sequence,
)
