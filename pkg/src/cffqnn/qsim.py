"""Exact statevector simulation for the handful of gates the models need.

Qubit ``k`` is bit ``k`` of the basis-state index (little-endian), so on two
qubits the amplitude at index 1 belongs to |q1 q0> = |01>, i.e. qubit 0 set.

Amplitude arrays may carry a leading batch axis, shape ``(batch, 2**n)``.
Gate angles are then either scalars or length-``batch`` arrays, which lets a
whole dataset go through one circuit template in a single pass.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

MAX_QUBITS = 12

Angle = Union[float, np.ndarray]


class Gate(str, enum.Enum):
    RY = "RY"
    CRY = "CRY"
    H = "H"
    PHASE = "PHASE"
    CNOT = "CNOT"


_CONTROLLED = {Gate.CRY, Gate.CNOT}
_ANGLED = {Gate.RY, Gate.CRY, Gate.PHASE}


@dataclass(frozen=True)
class GateOp:
    kind: Gate
    target: int
    control: Optional[int] = None
    angle: Optional[Angle] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Gate(self.kind))
        if self.kind in _CONTROLLED and self.control is None:
            raise ValueError(f"{self.kind.value} needs a control qubit")
        if self.kind not in _CONTROLLED and self.control is not None:
            raise ValueError(f"{self.kind.value} takes no control qubit")
        if self.control is not None and self.control == self.target:
            raise ValueError("control and target must differ")
        if self.kind in _ANGLED and self.angle is None:
            raise ValueError(f"{self.kind.value} needs an angle")
        if self.kind not in _ANGLED and self.angle is not None:
            raise ValueError(f"{self.kind.value} takes no angle")
        if self.target < 0 or (self.control is not None and self.control < 0):
            raise ValueError("qubit indices must be non-negative")

    @property
    def qubits(self) -> tuple:
        if self.control is None:
            return (self.target,)
        return (self.control, self.target)

    def validate(self, num_qubits: int) -> None:
        for q in self.qubits:
            if q >= num_qubits:
                raise ValueError(
                    f"qubit {q} out of range for a {num_qubits}-qubit register"
                )


def ry(target: int, angle: Angle) -> GateOp:
    return GateOp(Gate.RY, target, angle=angle)


def cry(control: int, target: int, angle: Angle) -> GateOp:
    return GateOp(Gate.CRY, target, control=control, angle=angle)


def h(target: int) -> GateOp:
    return GateOp(Gate.H, target)


def phase(target: int, angle: Angle) -> GateOp:
    return GateOp(Gate.PHASE, target, angle=angle)


def cnot(control: int, target: int) -> GateOp:
    return GateOp(Gate.CNOT, target, control=control)


@dataclass
class StateVector:
    """Amplitudes over ``num_qubits`` qubits, optionally batched."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_qubit_count(self.num_qubits)
        # kernels write through reshaped views, which needs contiguity
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape[-1] != 2**self.num_qubits:
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes, "
                f"got {self.amplitudes.shape[-1]}"
            )
        if self.amplitudes.ndim not in (1, 2):
            raise ValueError("amplitudes must be 1-D or (batch, 2**n)")

    @property
    def batched(self) -> bool:
        return self.amplitudes.ndim == 2

    def norm_squared(self):
        return np.sum(np.abs(self.amplitudes) ** 2, axis=-1)

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())


def _check_qubit_count(num_qubits: int) -> None:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ValueError(f"num_qubits must be in 1..{MAX_QUBITS}, got {num_qubits}")


def new_zero_state(num_qubits: int, batch: Optional[int] = None) -> StateVector:
    _check_qubit_count(num_qubits)
    shape = (2**num_qubits,) if batch is None else (batch, 2**num_qubits)
    amps = np.zeros(shape, dtype=np.complex128)
    amps[..., 0] = 1.0
    return StateVector(num_qubits, amps)


def _split_views(amps: np.ndarray, n: int, target: int, control: Optional[int]):
    """Views (a0, a1) on the target-bit-0 and target-bit-1 amplitudes.

    With a control, only the control-bit-1 half is included. Views share
    memory with ``amps`` so writes land in place.
    """
    b = amps.shape[0]
    if control is None:
        v = amps.reshape(b, 2 ** (n - 1 - target), 2, 2**target)
        return v[:, :, 0, :], v[:, :, 1, :]
    hi, lo = max(target, control), min(target, control)
    v = amps.reshape(b, 2 ** (n - 1 - hi), 2, 2 ** (hi - lo - 1), 2, 2**lo)
    if control == hi:
        sub = v[:, :, 1]
        return sub[:, :, :, 0], sub[:, :, :, 1]
    sub = v[:, :, :, :, 1]
    return sub[:, :, 0], sub[:, :, 1]


def _broadcast_angle(angle: Angle, like: np.ndarray):
    a = np.asarray(angle, dtype=np.float64)
    if a.ndim == 0:
        return a
    if a.shape != (like.shape[0],):
        raise ValueError(
            f"per-row angle array has shape {a.shape}, batch is {like.shape[0]}"
        )
    return a.reshape((-1,) + (1,) * (like.ndim - 1))


def apply_gate(state: StateVector, op: GateOp) -> StateVector:
    """Apply ``op`` to ``state`` in place and return it."""
    n = state.num_qubits
    op.validate(n)
    amps = state.amplitudes if state.batched else state.amplitudes[np.newaxis, :]
    a0, a1 = _split_views(amps, n, op.target, op.control)

    if op.kind in (Gate.RY, Gate.CRY):
        half = _broadcast_angle(op.angle, a0) / 2.0
        c, s = np.cos(half), np.sin(half)
        t0 = a0.copy()
        a0[...] = c * t0 - s * a1
        a1[...] = s * t0 + c * a1
    elif op.kind is Gate.H:
        t0 = a0.copy()
        a0[...] = (t0 + a1) * _INV_SQRT2
        a1[...] = (t0 - a1) * _INV_SQRT2
    elif op.kind is Gate.PHASE:
        a1 *= np.exp(1j * _broadcast_angle(op.angle, a1))
    elif op.kind is Gate.CNOT:
        t0 = a0.copy()
        a0[...] = a1
        a1[...] = t0
    return state


_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def _check_qubit(state: StateVector, qubit: int) -> None:
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(
            f"qubit {qubit} out of range for a {state.num_qubits}-qubit state"
        )


def marginal_probability_one(state: StateVector, qubit: int):
    """Probability of reading 1 on ``qubit`` (array if batched)."""
    _check_qubit(state, qubit)
    probs = np.abs(state.amplitudes) ** 2
    lead = probs.shape[:-1]
    v = probs.reshape(lead + (2 ** (state.num_qubits - 1 - qubit), 2, 2**qubit))
    return v[..., 1, :].sum(axis=(-2, -1))


def expectation_z(state: StateVector, qubit: int):
    _check_qubit(state, qubit)
    probs = np.abs(state.amplitudes) ** 2
    lead = probs.shape[:-1]
    v = probs.reshape(lead + (2 ** (state.num_qubits - 1 - qubit), 2, 2**qubit))
    return (v[..., 0, :] - v[..., 1, :]).sum(axis=(-2, -1))


def parity_signs(num_qubits: int, qubits: Sequence[int]) -> np.ndarray:
    """(-1)**(parity of the selected bits) for every basis index."""
    mask = 0
    for q in qubits:
        mask |= 1 << q
    idx = np.arange(2**num_qubits)
    bits = np.zeros_like(idx)
    masked = idx & mask
    while np.any(masked):
        bits ^= masked & 1
        masked >>= 1
    return 1.0 - 2.0 * bits


def expectation_z_product(state: StateVector, qubits: Sequence[int]):
    qubits = list(qubits)
    if not qubits:
        raise ValueError("need at least one qubit")
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate qubits in {qubits}")
    for q in qubits:
        _check_qubit(state, q)
    probs = np.abs(state.amplitudes) ** 2
    return probs @ parity_signs(state.num_qubits, qubits)
