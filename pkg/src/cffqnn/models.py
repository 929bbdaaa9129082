"""Circuit builders and readout for CFFQNN, FixedCFFQNN and the ZZ/RealAmplitudes QNN.

Qubits are laid out layer by layer: the first ``layer_widths[0]`` qubits are
the encoding layer, the next ``layer_widths[1]`` the first hidden layer, and
so on; the output node is the last qubit.

Every builder accepts a single feature vector ``(N,)`` or a batch ``(B, N)``.
In the batched case data-dependent angles become length-``B`` arrays and
:func:`cffqnn.circuit.run` must be called with ``batch=B``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from cffqnn import qsim
from cffqnn.circuit import Circuit, run


class ModelKind(str, enum.Enum):
    CFFQNN = "CFFQNN"
    FIXED_CFFQNN = "FIXED_CFFQNN"
    QNN_BASELINE = "QNN_BASELINE"
    MLP = "MLP"


QUANTUM_KINDS = (ModelKind.CFFQNN, ModelKind.FIXED_CFFQNN, ModelKind.QNN_BASELINE)


@dataclass(frozen=True)
class Topology:
    layer_widths: Tuple[int, ...]
    num_features: int

    def __post_init__(self):
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))
        if len(self.layer_widths) < 2:
            raise ValueError("a topology needs at least two layers")
        if any(w < 1 for w in self.layer_widths):
            raise ValueError(f"layer widths must be >= 1, got {self.layer_widths}")
        if self.layer_widths[-1] != 1:
            raise ValueError("the output layer must have exactly one node")
        if self.num_features < 1:
            raise ValueError("num_features must be >= 1")

    @property
    def num_qubits(self) -> int:
        return sum(self.layer_widths)

    def layer_qubits(self, layer: int) -> range:
        start = sum(self.layer_widths[:layer])
        return range(start, start + self.layer_widths[layer])

    @property
    def encoding_shape(self) -> Tuple[int, int]:
        return (self.layer_widths[0], self.num_features + 1)

    @property
    def hidden_shapes(self):
        w = self.layer_widths
        return [(w[l + 1], w[l] + 1) for l in range(len(w) - 1)]

    @property
    def num_encoding_parameters(self) -> int:
        r, c = self.encoding_shape
        return r * c

    @property
    def num_hidden_parameters(self) -> int:
        return sum(r * c for r, c in self.hidden_shapes)


@dataclass(frozen=True)
class ParameterSet:
    """Encoding weights (bias in column 0) and per-layer controlled-rotation angles.

    ``hidden[l][j, 0]`` is the bias rotation of node ``j`` in layer ``l + 1``;
    ``hidden[l][j, 1 + i]`` is the angle of the CRY from node ``i`` of layer
    ``l`` onto node ``j``. Flattening is row-major, encoding block first.
    """

    encoding: np.ndarray
    hidden: Tuple[np.ndarray, ...]

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.encoding.ravel()] + [h.ravel() for h in self.hidden])

    @classmethod
    def from_vector(cls, topology: Topology, vector) -> "ParameterSet":
        vector = np.asarray(vector, dtype=np.float64)
        expected = topology.num_encoding_parameters + topology.num_hidden_parameters
        if vector.shape != (expected,):
            raise ValueError(f"expected {expected} parameters, got {vector.shape}")
        n_enc = topology.num_encoding_parameters
        encoding = vector[:n_enc].reshape(topology.encoding_shape).copy()
        hidden, pos = [], n_enc
        for shape in topology.hidden_shapes:
            size = shape[0] * shape[1]
            hidden.append(vector[pos : pos + size].reshape(shape).copy())
            pos += size
        return cls(encoding, tuple(hidden))

    @classmethod
    def from_blocks(cls, topology: Topology, encoding, hidden_vector) -> "ParameterSet":
        return cls.from_vector(
            topology, np.concatenate([np.ravel(encoding), np.ravel(hidden_vector)])
        )

    @classmethod
    def zeros(cls, topology: Topology) -> "ParameterSet":
        n = topology.num_encoding_parameters + topology.num_hidden_parameters
        return cls.from_vector(topology, np.zeros(n))

    def check(self, topology: Topology) -> None:
        if self.encoding.shape != topology.encoding_shape or [
            h.shape for h in self.hidden
        ] != topology.hidden_shapes:
            raise ValueError("parameter shapes do not match the topology")


@dataclass(frozen=True)
class ModelSpec:
    """What to build: model kind plus its structural hyperparameters."""

    kind: ModelKind
    num_features: int
    layer_widths: Tuple[int, ...] = (3, 2, 1)
    feature_map_reps: int = 2
    ansatz_reps: int = 2

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "layer_widths", tuple(self.layer_widths))
        if self.kind is ModelKind.QNN_BASELINE and (
            self.feature_map_reps < 1 or self.ansatz_reps < 1
        ):
            raise ValueError("baseline QNN repetitions must be >= 1")

    @property
    def topology(self) -> Topology:
        return Topology(self.layer_widths, self.num_features)

    @property
    def num_qubits(self) -> int:
        if self.kind is ModelKind.QNN_BASELINE:
            return self.num_features
        return self.topology.num_qubits


def _features(features, num_features: int) -> Tuple[np.ndarray, Optional[int]]:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != num_features:
        raise ValueError(f"expected {num_features} features, got shape {x.shape}")
    return x, (x.shape[0] if x.ndim == 2 else None)


def encoding_angles(topology: Topology, params: ParameterSet, features) -> np.ndarray:
    """Collapsed first-layer angles b_q + sum_i W_qi x_i, shape (..., width0)."""
    x, _ = _features(features, topology.num_features)
    enc = params.encoding
    return enc[:, 0] + x @ enc[:, 1:].T


def build_cffqnn_circuit(topology: Topology, params: ParameterSet, features) -> Circuit:
    params.check(topology)
    z = encoding_angles(topology, params, features)
    ops = [qsim.ry(q, z[..., k]) for k, q in enumerate(topology.layer_qubits(0))]
    for l, theta in enumerate(params.hidden):
        sources = topology.layer_qubits(l)
        for j, tgt in enumerate(topology.layer_qubits(l + 1)):
            ops.append(qsim.ry(tgt, float(theta[j, 0])))
            for i, src in enumerate(sources):
                ops.append(qsim.cry(src, tgt, float(theta[j, 1 + i])))
    return Circuit(topology.num_qubits, ops)


def build_zz_feature_map(num_features: int, reps: int, features) -> Circuit:
    """H, P(2 x_i), then CNOT / P(2(pi - x_i)(pi - x_j)) / CNOT on every pair i < j."""
    x, _ = _features(features, num_features)
    ops = []
    for _ in range(reps):
        for q in range(num_features):
            ops.append(qsim.h(q))
        for q in range(num_features):
            ops.append(qsim.phase(q, 2.0 * x[..., q]))
        for i, j in itertools.combinations(range(num_features), 2):
            ops.append(qsim.cnot(i, j))
            ops.append(qsim.phase(j, 2.0 * (np.pi - x[..., i]) * (np.pi - x[..., j])))
            ops.append(qsim.cnot(i, j))
    return Circuit(num_features, ops)


def build_real_amplitudes(num_qubits: int, reps: int, thetas) -> Circuit:
    """RY layer, CNOT chain 0->1->...->n-1, repeated ``reps`` times, final RY layer."""
    thetas = np.asarray(thetas, dtype=np.float64)
    if thetas.shape != (num_qubits * (reps + 1),):
        raise ValueError(
            f"expected {num_qubits * (reps + 1)} ansatz angles, got {thetas.shape}"
        )
    layers = thetas.reshape(reps + 1, num_qubits)
    ops = []
    for r in range(reps + 1):
        ops.extend(qsim.ry(q, float(layers[r, q])) for q in range(num_qubits))
        if r < reps:
            ops.extend(qsim.cnot(q, q + 1) for q in range(num_qubits - 1))
    return Circuit(num_qubits, ops)


def build_qnn_circuit(
    num_features: int, feature_map_reps: int, ansatz_reps: int, thetas, features
) -> Circuit:
    return build_zz_feature_map(num_features, feature_map_reps, features) + (
        build_real_amplitudes(num_features, ansatz_reps, thetas)
    )


def build_circuit(spec: ModelSpec, params, features) -> Circuit:
    if spec.kind is ModelKind.QNN_BASELINE:
        return build_qnn_circuit(
            spec.num_features, spec.feature_map_reps, spec.ansatz_reps, params, features
        )
    if spec.kind in (ModelKind.CFFQNN, ModelKind.FIXED_CFFQNN):
        return build_cffqnn_circuit(spec.topology, params, features)
    raise ValueError(f"{spec.kind.value} is not a circuit model")


def readout_qubits(spec: ModelSpec) -> Tuple[int, ...]:
    """Qubits whose Z-parity is the model output."""
    if spec.kind is ModelKind.FIXED_CFFQNN:
        return tuple(range(spec.layer_widths[0], spec.num_qubits))
    return (spec.num_qubits - 1,)


def expectation(spec: ModelSpec, params, features):
    """Model output in [-1, 1]; an array for batched features."""
    x, batch = _features(features, spec.num_features)
    state = run(build_circuit(spec, params, x), batch=batch)
    qubits = readout_qubits(spec)
    if len(qubits) == 1:
        return qsim.expectation_z(state, qubits[0])
    return qsim.expectation_z_product(state, qubits)


def classify(expectation_value):
    """Class 1 iff the expectation is strictly negative (ties go to class 0)."""
    e = np.asarray(expectation_value)
    out = (e < 0).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def predict(spec: ModelSpec, params, features):
    e = expectation(spec, params, features)
    return e, classify(e)


def trainable_parameter_count(spec: ModelSpec) -> int:
    if spec.kind is ModelKind.QNN_BASELINE:
        return spec.num_features * (spec.ansatz_reps + 1)
    topo = spec.topology
    if spec.kind is ModelKind.CFFQNN:
        return topo.num_encoding_parameters + topo.num_hidden_parameters
    if spec.kind is ModelKind.FIXED_CFFQNN:
        return topo.num_hidden_parameters
    if spec.kind is ModelKind.MLP:
        widths = (spec.num_features,) + spec.layer_widths
        return sum((widths[l] + 1) * widths[l + 1] for l in range(len(widths) - 1))
    raise ValueError(spec.kind)


def ansatz_reps_to_match(num_features: int, target_parameters: int) -> int:
    """Smallest ansatz repetition count giving at least ``target_parameters``."""
    reps = 1
    while num_features * (reps + 1) < target_parameters:
        reps += 1
    return reps


def resource_circuit(spec: ModelSpec) -> Circuit:
    """A representative circuit for gate counting; counts do not depend on angles."""
    x = np.zeros(spec.num_features)
    if spec.kind is ModelKind.QNN_BASELINE:
        return build_circuit(spec, np.zeros(trainable_parameter_count(spec)), x)
    return build_circuit(spec, ParameterSet.zeros(spec.topology), x)


# --- parameter files -------------------------------------------------------


@dataclass
class ParameterFile:
    """Flat parameter vector plus the header needed to rebuild the model.

    ``values`` holds the trainable parameters; ``frozen`` the untrained
    encoding block of a FixedCFFQNN (empty otherwise).
    """

    kind: ModelKind
    layer_widths: Tuple[int, ...]
    num_features: int
    seed: int
    values: np.ndarray
    frozen: np.ndarray = field(default_factory=lambda: np.zeros(0))
    meta: dict = field(default_factory=dict)

    def model_spec(self) -> ModelSpec:
        return ModelSpec(
            self.kind,
            self.num_features,
            layer_widths=self.layer_widths,
            feature_map_reps=int(self.meta.get("feature_map_reps", 2)),
            ansatz_reps=int(self.meta.get("ansatz_reps", 2)),
        )

    def model_parameters(self) -> Union[ParameterSet, np.ndarray]:
        """Parameters in the form :func:`predict` expects."""
        spec = self.model_spec()
        if self.kind is ModelKind.CFFQNN:
            return ParameterSet.from_vector(spec.topology, self.values)
        if self.kind is ModelKind.FIXED_CFFQNN:
            return ParameterSet.from_blocks(spec.topology, self.frozen, self.values)
        return self.values


def _fmt(x) -> str:
    return format(float(x), ".17g")


def format_parameter_file(pf: ParameterFile) -> str:
    header = {
        "kind": pf.kind.value,
        "topology": ",".join(str(w) for w in pf.layer_widths),
        "num_features": pf.num_features,
        "seed": pf.seed,
        **pf.meta,
        "trainable": len(pf.values),
        "frozen": len(pf.frozen),
    }
    lines = [f"# {k} = {v}" for k, v in header.items()]
    lines += [_fmt(v) for v in pf.values]
    lines += [_fmt(v) for v in pf.frozen]
    return "\n".join(lines) + "\n"


def parse_parameter_file(text: str) -> ParameterFile:
    header, values = {}, []
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln:
            continue
        if ln.startswith("#"):
            key, _, val = ln[1:].partition("=")
            header[key.strip()] = val.strip()
        else:
            values.append(float(ln))
    try:
        n_train = int(header.pop("trainable"))
        n_frozen = int(header.pop("frozen"))
        kind = ModelKind(header.pop("kind"))
        widths = tuple(int(w) for w in header.pop("topology").split(","))
        num_features = int(header.pop("num_features"))
        seed = int(header.pop("seed"))
    except KeyError as exc:
        raise ValueError(f"parameter file header lacks {exc}") from None
    if len(values) != n_train + n_frozen:
        raise ValueError(
            f"header announces {n_train + n_frozen} values, file has {len(values)}"
        )
    vec = np.array(values, dtype=np.float64)
    return ParameterFile(
        kind, widths, num_features, seed, vec[:n_train], vec[n_train:], header
    )
