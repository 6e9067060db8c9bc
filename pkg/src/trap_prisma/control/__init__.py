from trap_prisma.control.accounting import OpCounts, count_ops
from trap_prisma.control.operations import (
    ActuationSequence,
    Axis,
    Batch,
    BatchKind,
    BatchViolation,
    ContractError,
    ElementaryOp,
    Extract,
    Implant,
    NoOp,
    Step,
    apply_batch,
    apply_sequence,
    validate_batch,
)
