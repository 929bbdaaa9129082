"""Circuit container, execution, resource tallies and a text serialization.

Text format: one op per line, ``KIND target [control] [angle]`` with angles
written to 17 significant digits so a round trip is exact.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from cffqnn.qsim import Gate, GateOp, StateVector, apply_gate, new_zero_state

# CRY decomposes into two CNOTs plus two single-qubit rotations.
CNOTS_PER_CRY = 2


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        for op in self.ops:
            op.validate(self.num_qubits)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.num_qubits != self.num_qubits:
            raise ValueError("cannot concatenate circuits of different widths")
        return Circuit(self.num_qubits, self.ops + other.ops)

    def __len__(self) -> int:
        return len(self.ops)


@dataclass
class ResourceReport:
    depth: int
    native_controlled_ops: int
    native_cnots: int
    native_crys: int
    cnot_equivalent: int
    entangling_pairs: int
    single_qubit_gates: int
    trainable_parameters: int
    wall_time_seconds: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def run(circuit: Circuit, batch: Optional[int] = None) -> StateVector:
    state = new_zero_state(circuit.num_qubits, batch=batch)
    for op in circuit.ops:
        apply_gate(state, op)
    return state


def depth(circuit: Circuit) -> int:
    """ASAP layer count; ops share a layer only on disjoint qubits."""
    frontier = [0] * circuit.num_qubits
    for op in circuit.ops:
        layer = max(frontier[q] for q in op.qubits) + 1
        for q in op.qubits:
            frontier[q] = layer
    return max(frontier, default=0)


def count_resources(circuit: Circuit, trainable_parameters: int) -> ResourceReport:
    if trainable_parameters < 0:
        raise ValueError("trainable_parameters must be >= 0")
    n_cnot = sum(op.kind is Gate.CNOT for op in circuit.ops)
    n_cry = sum(op.kind is Gate.CRY for op in circuit.ops)
    pairs = {frozenset(op.qubits) for op in circuit.ops if op.control is not None}
    return ResourceReport(
        depth=depth(circuit),
        native_controlled_ops=n_cnot + n_cry,
        native_cnots=n_cnot,
        native_crys=n_cry,
        cnot_equivalent=n_cnot + CNOTS_PER_CRY * n_cry,
        entangling_pairs=len(pairs),
        single_qubit_gates=len(circuit.ops) - n_cnot - n_cry,
        trainable_parameters=trainable_parameters,
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def to_text(circuit: Circuit) -> str:
    lines = [f"QUBITS {circuit.num_qubits}"]
    for op in circuit.ops:
        if op.angle is not None and np.ndim(op.angle) != 0:
            raise ValueError("per-row (batched) angles cannot be serialized")
        parts = [op.kind.value, str(op.target)]
        if op.control is not None:
            parts.append(str(op.control))
        if op.angle is not None:
            parts.append(_fmt(op.angle))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Circuit:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("QUBITS "):
        raise ValueError("missing 'QUBITS n' header line")
    n = int(lines[0].split()[1])
    ops = []
    for ln in lines[1:]:
        kind, *rest = ln.split()
        kind = Gate(kind)
        target = int(rest[0])
        control = None
        angle = None
        if kind in (Gate.CRY, Gate.CNOT):
            control = int(rest[1])
            rest = rest[2:]
        else:
            rest = rest[1:]
        if rest:
            angle = float(rest[0])
        ops.append(GateOp(kind, target, control=control, angle=angle))
    return Circuit(n, ops)


def remap_qubits(circuit: Circuit, perm: Sequence[int]) -> Circuit:
    """Relabel qubit ``q`` as ``perm[q]``."""
    ops = [
        GateOp(
            op.kind,
            perm[op.target],
            control=None if op.control is None else perm[op.control],
            angle=op.angle,
        )
        for op in circuit.ops
    ]
    return Circuit(circuit.num_qubits, ops)


def concat(circuits: Iterable[Circuit]) -> Circuit:
    circuits = list(circuits)
    out = circuits[0]
    for c in circuits[1:]:
        out = out + c
    return out
