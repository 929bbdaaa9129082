"""Derivative-free minimization and the hybrid training loop for circuit models."""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from cffqnn.models import ModelKind, ModelSpec, ParameterSet, expectation, trainable_parameter_count

PROB_CLAMP = 1e-12

# per-stage offsets from the run seed
SEED_OFFSET_INIT = 2
SEED_OFFSET_FROZEN = 3


class OptimizerError(RuntimeError):
    pass


class LossKind(str, enum.Enum):
    BCE = "BCE"
    SQUARED = "SQUARED"


@dataclass
class ObjectiveSpec:
    evaluate: Callable[[np.ndarray], float]
    initial_point: np.ndarray
    budget: int
    trust_region_initial: float = 1.0
    trust_region_final: float = 1e-4

    def __post_init__(self):
        self.initial_point = np.asarray(self.initial_point, dtype=np.float64)
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if not self.trust_region_final < self.trust_region_initial:
            raise ValueError("trust_region_final must be below trust_region_initial")

    @property
    def dimension(self) -> int:
        return len(self.initial_point)


@dataclass
class MinimizeResult:
    best_point: np.ndarray
    best_value: float
    evaluations_used: int
    history: List[float] = field(default_factory=list)


class _BudgetExhausted(Exception):
    pass


def minimize(spec: ObjectiveSpec) -> MinimizeResult:
    """COBYLA (scipy) under a hard evaluation budget, returning the best point seen."""
    best = {"x": None, "f": math.inf}
    history: List[float] = []

    def wrapped(x):
        if len(history) >= spec.budget:
            raise _BudgetExhausted
        value = float(spec.evaluate(np.array(x, dtype=np.float64)))
        if not math.isfinite(value):
            raise OptimizerError(f"objective returned {value} at evaluation {len(history)}")
        history.append(value)
        if value < best["f"] or best["x"] is None:
            best["x"], best["f"] = np.array(x, dtype=np.float64), value
        return value

    wrapped(spec.initial_point)
    if spec.budget > 1:
        try:
            _scipy_minimize(
                wrapped,
                spec.initial_point,
                method="COBYLA",
                options={
                    # scipy counts the initial point again
                    "maxiter": spec.budget - 1,
                    "rhobeg": spec.trust_region_initial,
                    "tol": spec.trust_region_final,
                },
            )
        except _BudgetExhausted:
            pass
    return MinimizeResult(best["x"], best["f"], len(history), history)


def loss(expectations, labels, kind: LossKind = LossKind.BCE) -> float:
    """Loss on class-1 probabilities p = (1 - <Z>) / 2."""
    e = np.asarray(expectations, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if e.shape != y.shape:
        raise ValueError(f"length mismatch: {e.shape} vs {y.shape}")
    if e.size == 0:
        raise ValueError("empty input")
    p = np.clip((1.0 - e) / 2.0, PROB_CLAMP, 1.0 - PROB_CLAMP)
    if LossKind(kind) is LossKind.BCE:
        return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))
    return float(np.mean((p - y) ** 2))


@dataclass
class TrainConfig:
    iterations: int = 100
    seed: int = 42
    loss_kind: LossKind = LossKind.BCE
    trust_region_initial: float = 1.0
    trust_region_final: float = 1e-4

    def __post_init__(self):
        self.loss_kind = LossKind(self.loss_kind)
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass
class TrainResult:
    params: object  # ParameterSet, or a plain angle vector for the QNN
    trainable: np.ndarray
    frozen: np.ndarray
    log: List[float]
    wall_time_seconds: float
    optimizer: str = "COBYLA"


def initial_parameters(spec: ModelSpec, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Seeded (trainable, frozen) vectors; only FixedCFFQNN has a frozen block."""
    init = np.random.default_rng(seed + SEED_OFFSET_INIT).uniform(
        -0.1, 0.1, trainable_parameter_count(spec)
    )
    if spec.kind is ModelKind.FIXED_CFFQNN:
        frozen = np.random.default_rng(seed + SEED_OFFSET_FROZEN).uniform(
            -1.0, 1.0, spec.topology.num_encoding_parameters
        )
    else:
        frozen = np.zeros(0)
    return init, frozen


def assemble(spec: ModelSpec, trainable: np.ndarray, frozen: np.ndarray):
    if spec.kind is ModelKind.CFFQNN:
        return ParameterSet.from_vector(spec.topology, trainable)
    if spec.kind is ModelKind.FIXED_CFFQNN:
        return ParameterSet.from_blocks(spec.topology, frozen, trainable)
    if spec.kind is ModelKind.QNN_BASELINE:
        return np.asarray(trainable)
    raise ValueError(f"{spec.kind.value} is not trained by this loop")


def train(spec: ModelSpec, features, labels, config: TrainConfig) -> TrainResult:
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if len(y) == 0:
        raise ValueError("cannot train on an empty dataset")
    trainable0, frozen = initial_parameters(spec, config.seed)

    def objective(theta):
        e = expectation(spec, assemble(spec, theta, frozen), X)
        return loss(e, y, config.loss_kind)

    start = time.perf_counter()
    result = minimize(
        ObjectiveSpec(
            objective,
            trainable0,
            config.iterations,
            config.trust_region_initial,
            config.trust_region_final,
        )
    )
    elapsed = time.perf_counter() - start
    return TrainResult(
        params=assemble(spec, result.best_point, frozen),
        trainable=result.best_point,
        frozen=frozen,
        log=result.history,
        wall_time_seconds=elapsed,
    )


def format_training_log(log: List[float], wall_time_seconds: float, optimizer: str = "COBYLA") -> str:
    lines = ["eval_index, loss"]
    lines += [f"{i}, {format(v, '.17g')}" for i, v in enumerate(log)]
    lines.append(f"# optimizer = {optimizer}")
    lines.append(f"# wall_time_seconds = {wall_time_seconds:.6f}")
    return "\n".join(lines) + "\n"


def parse_training_log(text: str) -> Tuple[List[float], Optional[float]]:
    losses, wall = [], None
    for ln in text.splitlines()[1:]:
        if ln.startswith("# wall_time_seconds"):
            wall = float(ln.split("=")[1])
        elif ln and not ln.startswith("#"):
            losses.append(float(ln.split(",")[1]))
    return losses, wall
