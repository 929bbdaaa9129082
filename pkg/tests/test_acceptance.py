"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the terminal summary (see
``conftest.pytest_terminal_summary``) so they show up without ``-s``.
"""

import json
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from cffqnn import cli
from cffqnn import data as D
from cffqnn.circuit import count_resources
from cffqnn.mlp import MlpModel, bce_loss, loss_and_gradient, mlp_forward, mlp_train
from cffqnn.models import (
    ModelSpec,
    ansatz_reps_to_match,
    build_real_amplitudes,
    build_zz_feature_map,
    resource_circuit,
    trainable_parameter_count,
)
from cffqnn.optimize import ObjectiveSpec, minimize
from cffqnn import qsim

from conftest import random_op, random_state, write_credit_card_like_csv
from test_qsim import apply_all, branch_oracle

RESULTS = []


def report(number, title, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_criterion_1_simulator_properties():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_norm = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        ops = [random_op(rng, n) for _ in range(int(rng.integers(1, 201)))]
        worst_norm = max(worst_norm, abs(apply_all(n, ops).norm_squared() - 1))

    worst_add = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 5))
        q = int(rng.integers(n))
        a, b = rng.uniform(-2 * np.pi, 2 * np.pi, 2)
        psi = random_state(rng, n).amplitudes
        two = apply_all(n, [qsim.ry(q, a), qsim.ry(q, b)], psi).amplitudes
        one = apply_all(n, [qsim.ry(q, a + b)], psi).amplitudes
        worst_add = max(worst_add, np.max(np.abs(two - one)))

    worst_comm = 0.0
    for _ in range(200):
        n = int(rng.integers(3, 6))
        thetas = rng.uniform(-np.pi, np.pi, n - 1)
        ops = [qsim.cry(i, n - 1, t) for i, t in enumerate(thetas)]
        psi = random_state(rng, n).amplitudes
        perm = [ops[i] for i in rng.permutation(len(ops))]
        diff = apply_all(n, ops, psi).amplitudes - apply_all(n, perm, psi).amplitudes
        worst_comm = max(worst_comm, np.max(np.abs(diff)))

    worst_branch = 0.0
    for n in (1, 2, 3):
        for _ in range(50):
            zs = rng.uniform(0, 2 * np.pi, n)
            thetas = rng.uniform(-np.pi, np.pi, n)
            controls = [np.array([np.cos(z / 2), np.sin(z / 2)]) for z in zs]
            ops = [qsim.ry(i, z) for i, z in enumerate(zs)]
            ops += [qsim.cry(i, n, t) for i, t in enumerate(thetas)]
            got = apply_all(n + 1, ops).amplitudes
            worst_branch = max(worst_branch, np.max(np.abs(got - branch_oracle(controls, thetas))))
    elapsed = time.perf_counter() - start

    ok = worst_norm < 1e-10 and max(worst_add, worst_comm, worst_branch) <= 1e-12 and elapsed < 10
    report(
        1,
        "simulator properties",
        ok,
        f"norm {worst_norm:.1e}, additivity {worst_add:.1e}, commutation {worst_comm:.1e}, "
        f"branch {worst_branch:.1e}, {elapsed:.2f}s",
    )


def test_criterion_2_resource_counts():
    zz = count_resources(build_zz_feature_map(7, 1, np.zeros(7)), 0)
    ra = count_resources(build_real_amplitudes(7, 2, np.zeros(21)), 21)
    cf = count_resources(resource_circuit(ModelSpec("CFFQNN", 7, (3, 2, 1))), 35)
    got = (zz.entangling_pairs, ra.native_controlled_ops, cf.native_crys, cf.cnot_equivalent)
    report(2, "resource counts", got == (21, 12, 8, 16),
           f"ZZ pairs {got[0]}, RealAmplitudes controlled {got[1]}, CFFQNN CRY {got[2]}, CNOT-equiv {got[3]}")


def test_criterion_3_parameter_counts():
    cf = trainable_parameter_count(ModelSpec("CFFQNN", 7, (3, 2, 1)))
    fx = trainable_parameter_count(ModelSpec("FIXED_CFFQNN", 7, (3, 2, 1)))
    reps = ansatz_reps_to_match(7, cf)
    extra = trainable_parameter_count(ModelSpec("QNN_BASELINE", 7, ansatz_reps=reps))
    report(3, "parameter counts", cf == 35 and fx == 11 and extra >= 35,
           f"CFFQNN {cf}, FixedCFFQNN {fx}, QNN-extra-params {extra} at {reps} reps")


def test_criterion_4_data_pipeline(breast_cancer_csv, tmp_path):
    cc = D.ingest_csv(write_credit_card_like_csv(tmp_path / "cc.csv"), "Class", "1")
    cc_prep = D.prepare_dataset(cc, 7, 0.7, seed=42, do_balance=True)
    bc = D.ingest_csv(breast_cancer_csv, "diagnosis", "M", exclude_columns=["id"])
    bc_prep = D.prepare_dataset(bc, 7, 0.8, seed=42)
    sizes = (len(cc_prep.train), len(cc_prep.test), len(bc_prep.train), len(bc_prep.test))

    comps = bc_prep.pca.components
    ortho = float(np.max(np.abs(comps @ comps.T - np.eye(len(comps)))))
    # raw 30-feature covariance: eigenvalues span ~1e-7 to ~4e5, a hard case for Jacobi
    cov = np.cov(bc.features, rowvar=False)
    vals, vecs = D.jacobi_eigh(cov)
    residual = float(np.max(np.abs(cov @ vecs - vecs * vals)))
    ok = sizes == (688, 296, 455, 114) and ortho < 1e-8 and residual < 1e-6
    report(4, "data pipeline", ok,
           f"credit-card {sizes[0]}/{sizes[1]}, breast-cancer {sizes[2]}/{sizes[3]}, "
           f"orthonormality {ortho:.1e}, eigen residual {residual:.1e}")


@pytest.mark.slow
def test_criterion_5_end_to_end_ordering(breast_cancer_csv, tmp_path):
    start = time.perf_counter()
    prep = str(tmp_path / "prep")
    flags = ["--label-column", "diagnosis", "--positive-label", "M", "--exclude-columns", "id"]
    assert cli.main(["prepare", "--data", breast_cancer_csv, *flags, "--out", prep]) == 0
    out = str(tmp_path / "compare")
    assert cli.main(["compare", "--prepared", prep, "--seed", "42", "--budget", "100", "--out", out]) == 0
    with open(os.path.join(out, "comparison.json")) as fh:
        by = {r["name"]: r for r in json.load(fh)["records"]}
    elapsed = time.perf_counter() - start

    def f1(name):
        return by[name]["f1"] or 0.0

    ok = (
        all(f1(m) > 0 and by[m]["accuracy"] > 0.5 for m in ("CFFQNN", "FixedCFFQNN"))
        and f1("CFFQNN") >= f1("QNN")
        and elapsed < 300
    )
    summary = ", ".join(f"{m} F1 {f1(m):.3f} acc {by[m]['accuracy']:.3f}" for m in by)
    report(5, "end-to-end ordering", ok, f"{summary}, {elapsed:.1f}s")


def test_criterion_6_optimizer():
    start = time.perf_counter()
    r = minimize(ObjectiveSpec(lambda x: float(np.sum(x**2)), np.ones(5), 500))
    rng = np.random.default_rng(6)
    never_worse = True
    for _ in range(20):
        a = rng.normal(size=4)
        f = lambda x, a=a: float(np.sum((x - a) ** 2 - np.cos(3 * x)))
        x0 = rng.normal(size=4)
        never_worse &= minimize(ObjectiveSpec(f, x0, int(rng.integers(1, 60)))).best_value <= f(x0)
    elapsed = time.perf_counter() - start
    ok = r.best_value < 1e-4 and r.evaluations_used <= 500 and never_worse and elapsed < 1
    report(6, "optimizer sanity", ok,
           f"sphere {r.best_value:.1e} in {r.evaluations_used} evals, {elapsed:.2f}s")


def test_criterion_7_mlp():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    m = MlpModel.init((7, 3, 2, 1), 7)
    X, y = rng.normal(size=(30, 7)), rng.integers(0, 2, 30)
    _, grad = loss_and_gradient(m, X, y)
    vec, h = m.to_vector(), 1e-5
    fd = np.array([
        (bce_loss(MlpModel.from_vector(m.layer_widths, vec + h * e), X, y)
         - bce_loss(MlpModel.from_vector(m.layer_widths, vec - h * e), X, y)) / (2 * h)
        for e in np.eye(len(vec))
    ])
    rel = float(np.linalg.norm(grad - fd) / np.linalg.norm(fd))
    xor_x = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float)
    xor_y = np.array([0, 1, 1, 0])
    trained, _ = mlp_train(MlpModel.init((2, 4, 1), 0), xor_x, xor_y, 5000, 0.5)
    acc = float(np.mean((mlp_forward(trained, xor_x) > 0.5) == xor_y))
    elapsed = time.perf_counter() - start
    report(7, "MLP baseline", rel < 1e-4 and acc == 1.0 and elapsed < 30,
           f"gradient rel err {rel:.1e}, XOR accuracy {acc:.2f}, {elapsed:.2f}s")


def test_criterion_8_reproducibility(breast_cancer_csv, tmp_path):
    prep = str(tmp_path / "prep")
    flags = ["--label-column", "diagnosis", "--positive-label", "M", "--exclude-columns", "id"]
    assert cli.main(["prepare", "--data", breast_cancer_csv, *flags, "--out", prep]) == 0
    base = cli.RunConfig(prepared=prep, seed=42, mlp_epochs=200)
    identical = []
    for model in ("CFFQNN", "FIXED_CFFQNN", "QNN_BASELINE", "MLP"):
        blobs = []
        for run in ("a", "b"):
            cfg = replace(base, model=model, out=str(tmp_path / model / run))
            cli.cmd_train(cfg)
            with open(os.path.join(cfg.out, "params.txt"), "rb") as fh:
                blobs.append(fh.read())
        identical.append(blobs[0] == blobs[1])
    report(8, "reproducibility", all(identical),
           f"{sum(identical)}/{len(identical)} models byte-identical")
