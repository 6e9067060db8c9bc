from trap_prisma.lattice.grid import GridSpec, TrapIndex, target_region
from trap_prisma.lattice.array_state import (
    EMPTY,
    ArrayState,
    Atom,
    Configuration,
    column_view,
)
