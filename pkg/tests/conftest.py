import os
import sys

import numpy as np
import pytest

from cffqnn import qsim

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "scripts"))

I2 = np.eye(2)
P0 = np.diag([1.0, 0.0])
P1 = np.diag([0.0, 1.0])
X = np.array([[0, 1], [1, 0]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def ry_matrix(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def phase_matrix(theta):
    return np.diag([1.0, np.exp(1j * theta)])


def embed(n, mats):
    """Dense operator with ``mats[q]`` on qubit q (identity elsewhere); qubit 0 is the lowest bit."""
    out = np.array([[1.0 + 0j]])
    for q in reversed(range(n)):
        out = np.kron(out, mats.get(q, I2))
    return out


def dense_gate(n, op):
    """Independent dense-matrix reference for one GateOp."""
    kind = op.kind
    if kind is qsim.Gate.RY:
        return embed(n, {op.target: ry_matrix(op.angle)})
    if kind is qsim.Gate.H:
        return embed(n, {op.target: H})
    if kind is qsim.Gate.PHASE:
        return embed(n, {op.target: phase_matrix(op.angle)})
    u = ry_matrix(op.angle) if kind is qsim.Gate.CRY else X
    return embed(n, {op.control: P0}) + embed(n, {op.control: P1, op.target: u})


def random_op(rng, n):
    kinds = ["RY", "H", "PHASE"] + (["CRY", "CNOT"] if n > 1 else [])
    kind = kinds[rng.integers(len(kinds))]
    t = int(rng.integers(n))
    angle = float(rng.uniform(-2 * np.pi, 2 * np.pi))
    if kind in ("CRY", "CNOT"):
        c = int(rng.choice([q for q in range(n) if q != t]))
        return qsim.cry(c, t, angle) if kind == "CRY" else qsim.cnot(c, t)
    if kind == "RY":
        return qsim.ry(t, angle)
    if kind == "PHASE":
        return qsim.phase(t, angle)
    return qsim.h(t)


def random_state(rng, n):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return qsim.StateVector(n, v / np.linalg.norm(v))


@pytest.fixture(scope="session")
def breast_cancer_csv(tmp_path_factory):
    pytest.importorskip("sklearn")
    from export_breast_cancer import export

    return export(str(tmp_path_factory.mktemp("data") / "breast_cancer.csv"))


def write_credit_card_like_csv(path, n_fraud=492, n_legit=5000, seed=0):
    """Synthetic stand-in with the credit-card schema (Time, V1..V28, Amount, Class)."""
    rng = np.random.default_rng(seed)
    header = ["Time"] + [f"V{i}" for i in range(1, 29)] + ["Amount", "Class"]
    rows = []
    for label, count in ((1, n_fraud), (0, n_legit)):
        feats = rng.normal(loc=0.8 * label, size=(count, 30))
        for f in feats:
            rows.append([f"{v:.6f}" for v in f] + [f'"{label}"'])
    order = rng.permutation(len(rows))
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in order:
            fh.write(",".join(rows[i]) + "\n")
    return str(path)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
