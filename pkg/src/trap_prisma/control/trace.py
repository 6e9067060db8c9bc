"""
Protocol traces as JSON lines.

The first line is a header with the grid and the initial configuration; each batch
is one record (cycle, batch ordinal, kind, axis/sign, addressed traps); measurements
record the number of detected atoms. See docs/TraceFormat.md.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, TextIO

from trap_prisma.control.accounting import OpCounts
from trap_prisma.control.operations import (
    ActuationSequence,
    Axis,
    Batch,
    BatchKind,
    BatchViolation,
    Extract,
    Implant,
    Step,
    apply_batch,
    validate_batch,
)
from trap_prisma.lattice.array_state import ArrayState, Configuration
from trap_prisma.lattice.grid import GridSpec, TrapIndex

TRACE_SCHEMA = 1

logger = logging.getLogger(__name__)


def batch_to_record(cycle: int, ordinal: int, batch: Batch) -> dict:
    direction = batch.direction
    return {
        "record": "batch",
        "cycle": cycle,
        "batch": ordinal,
        "kind": batch.kind.value,
        "axis": direction[0].value if direction else None,
        "sign": direction[1] if direction else None,
        "ops": [[op.name, int(op.at.col), int(op.at.row)] for op in batch.ops],
    }


def record_to_batch(record: dict) -> Batch:
    kind = BatchKind(record["kind"])
    ops = []
    for name, col, row in record["ops"]:
        at = TrapIndex(col, row)
        if name == "extract":
            ops.append(Extract(at))
        elif name == "implant":
            ops.append(Implant(at))
        elif name == "step":
            ops.append(Step(Axis(record["axis"]), int(record["sign"]), at))
        else:
            raise ValueError(f"Unknown operation '{name}' in trace record")
    return Batch(kind, tuple(ops))


class TraceWriter:
    """Streams trace records to a file; use as a context manager."""

    def __init__(self, path):
        self.path = Path(path)
        self._handle: Optional[TextIO] = None

    def __enter__(self) -> "TraceWriter":
        self._handle = open(self.path, "w")
        return self

    def __exit__(self, *exc) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def _write(self, record: dict) -> None:
        self._handle.write(json.dumps(record, sort_keys=True) + "\n")

    def header(self, config: Configuration, **extra) -> None:
        spec = config.spec
        self._write({
            "record": "header",
            "schema": TRACE_SCHEMA,
            "grid": {
                "width": spec.width,
                "height": spec.height,
                "target_width": spec.target_width,
                "target_height": spec.target_height,
            },
            "initial": [[p.col, p.row] for p in config.sorted_positions()],
            **extra,
        })

    def sequence(self, cycle: int, sequence: ActuationSequence) -> None:
        for ordinal, batch in enumerate(sequence):
            self._write(batch_to_record(cycle, ordinal, batch))

    def measurement(self, cycle: int, n_atoms: int) -> None:
        self._write({"record": "measure", "cycle": cycle, "atoms": n_atoms})


@dataclass
class Trace:
    initial: Configuration
    cycles: dict[int, ActuationSequence] = field(default_factory=dict)
    measurements: dict[int, int] = field(default_factory=dict)


def read_trace(path) -> Trace:
    trace = None
    with open(path) as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            kind = record.get("record")
            if kind == "header":
                if record.get("schema") != TRACE_SCHEMA:
                    raise ValueError(f"Unsupported trace schema {record.get('schema')}")
                spec = GridSpec(**record["grid"])
                trace = Trace(Configuration.from_positions(spec, record["initial"]))
            elif trace is None:
                raise ValueError(f"{path}:{line_number}: trace must start with a header record")
            elif kind == "batch":
                trace.cycles.setdefault(record["cycle"], ActuationSequence()).append(record_to_batch(record))
            elif kind == "measure":
                trace.measurements[record["cycle"]] = record["atoms"]
            else:
                raise ValueError(f"{path}:{line_number}: unknown record type '{kind}'")
    if trace is None:
        raise ValueError(f"{path}: empty trace")
    return trace


@dataclass
class ReplayResult:
    final: Configuration
    counts: OpCounts
    violations: list[tuple[int, int, BatchViolation]]


def replay_trace(trace: Trace) -> ReplayResult:
    """
    Re-applies every recorded batch without loss, starting from the recorded initial
    configuration. Batches that fail validation are reported and skipped.
    """
    state = ArrayState.from_configuration(trace.initial)
    counts = OpCounts()
    violations = []
    for cycle in sorted(trace.cycles):
        for ordinal, batch in enumerate(trace.cycles[cycle]):
            violation = validate_batch(batch, state)
            if violation is not None:
                logger.warning("Cycle %d batch %d: %s", cycle, ordinal, violation)
                violations.append((cycle, ordinal, violation))
                continue
            state, delta = apply_batch(state, batch, in_place=True)
            counts += delta
    return ReplayResult(state.configuration(), counts, violations)
