from trap_prisma.solvers.mwpm import mwpm_cycle
from trap_prisma.solvers.redrec import redrec_cycle

planner_dict = {
    "redrec": redrec_cycle,
    "mwpm": mwpm_cycle,
}

sampling_modes = ("corruption", "immediate")
