"""Command-line driver: prepare -> train -> evaluate, plus compare and resources.

Every flag can also come from a ``key = value`` config file (``--config``);
flags given on the command line win. Each command writes the fully resolved
configuration to ``config.txt`` in its output directory.

Exit status: 0 success, 2 input error, 3 consistency error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, fields
from typing import List, Optional

import numpy as np

from cffqnn import data as D
from cffqnn import metrics as M
from cffqnn.circuit import count_resources
from cffqnn.mlp import MlpModel, mlp_forward, mlp_train
from cffqnn.models import (
    ModelKind,
    ModelSpec,
    ParameterFile,
    ansatz_reps_to_match,
    classify,
    expectation,
    format_parameter_file,
    parse_parameter_file,
    resource_circuit,
    trainable_parameter_count,
)
from cffqnn.optimize import (
    OptimizerError,
    TrainConfig,
    format_training_log,
    parse_training_log,
    train,
)

log = logging.getLogger("cffqnn")

EXIT_OK, EXIT_INPUT, EXIT_CONSISTENCY, EXIT_RUNTIME = 0, 2, 3, 4
SEED_OFFSET_MLP = 4

TRAIN_FILE, TEST_FILE = "train.dat", "test.dat"
PARAMS_FILE, LOG_FILE = "params.txt", "train_log.txt"


class ConsistencyError(Exception):
    pass


@dataclass
class RunConfig:
    data: Optional[str] = None
    label_column: str = "diagnosis"
    positive_label: str = "M"
    exclude_columns: str = ""
    pca_k: int = 7
    train_fraction: float = 0.8
    balance: bool = False
    model: str = "CFFQNN"
    topology: str = "3,2,1"
    feature_map_reps: int = 2
    ansatz_reps: int = 2
    budget: int = 100
    loss: str = "BCE"
    trust_region_initial: float = 1.0
    trust_region_final: float = 1e-4
    mlp_epochs: int = 2000
    mlp_learning_rate: float = 0.5
    seed: int = 42
    out: str = "runs/default"
    prepared: Optional[str] = None
    train_file: Optional[str] = None
    test_file: Optional[str] = None
    params: Optional[str] = None

    @property
    def layer_widths(self):
        return tuple(int(w) for w in self.topology.split(","))

    def to_text(self) -> str:
        return "".join(
            f"{f.name} = {'' if getattr(self, f.name) is None else getattr(self, f.name)}\n"
            for f in fields(self)
        )


def _coerce(name: str, raw: str):
    ftype = {f.name: f.type for f in fields(RunConfig)}[name]
    raw = raw.strip()
    if "bool" in str(ftype):
        return raw.lower() in ("1", "true", "yes", "on")
    if raw == "" and "Optional" in str(ftype):
        return None
    if "int" in str(ftype):
        return int(raw)
    if "float" in str(ftype):
        return float(raw)
    return raw


def read_config_file(path) -> dict:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such config file: {path}")
    known = {f.name for f in fields(RunConfig)}
    out = {}
    with open(path) as fh:
        for n, ln in enumerate(fh, 1):
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            key, sep, val = ln.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or key not in known:
                raise ValueError(f"{path}:{n}: unrecognized line {ln!r}")
            out[key] = _coerce(key, val)
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return RunConfig(**values)


def write_config(cfg: RunConfig, out_dir: str) -> None:
    with open(os.path.join(out_dir, "config.txt"), "w") as fh:
        fh.write(cfg.to_text())


def _model_spec(cfg: RunConfig, num_features: int, kind: Optional[str] = None) -> ModelSpec:
    return ModelSpec(
        ModelKind(kind or cfg.model),
        num_features,
        layer_widths=cfg.layer_widths,
        feature_map_reps=cfg.feature_map_reps,
        ansatz_reps=cfg.ansatz_reps,
    )


# --- commands ----------------------------------------------------------------


def cmd_prepare(cfg: RunConfig) -> D.PreparedData:
    if not cfg.data:
        raise ValueError("prepare needs --data")
    excluded = [c for c in cfg.exclude_columns.split(",") if c]
    dataset = D.ingest_csv(cfg.data, cfg.label_column, cfg.positive_label, excluded)
    prep = D.prepare_dataset(
        dataset, cfg.pca_k, cfg.train_fraction, cfg.seed, do_balance=cfg.balance
    )
    os.makedirs(cfg.out, exist_ok=True)
    for name, part in ((TRAIN_FILE, prep.train), (TEST_FILE, prep.test)):
        D.write_processed(
            os.path.join(cfg.out, name), part.features, part.labels, cfg.seed, prep.digest
        )
    with open(os.path.join(cfg.out, "prepare_report.json"), "w") as fh:
        json.dump({**prep.report, "digest": prep.digest}, fh, indent=2)
    write_config(cfg, cfg.out)
    log.info("prepared %d train / %d test rows", len(prep.train), len(prep.test))
    return prep


def _train_file(cfg: RunConfig) -> str:
    if cfg.train_file:
        return cfg.train_file
    if cfg.prepared:
        return os.path.join(cfg.prepared, TRAIN_FILE)
    raise ValueError("train needs --train-file or --prepared")


def _test_file(cfg: RunConfig) -> str:
    if cfg.test_file:
        return cfg.test_file
    if cfg.prepared:
        return os.path.join(cfg.prepared, TEST_FILE)
    raise ValueError("evaluate needs --test-file or --prepared")


def cmd_train(cfg: RunConfig, kind: Optional[str] = None) -> ParameterFile:
    kind = ModelKind(kind or cfg.model)
    if cfg.budget < 1:
        raise ValueError(f"optimizer budget must be >= 1, got {cfg.budget}")
    path = _train_file(cfg)
    prepared = D.read_processed(path)
    if prepared.k != cfg.pca_k:
        raise ConsistencyError(f"{path} has {prepared.k} features but pca_k = {cfg.pca_k}")
    spec = _model_spec(cfg, prepared.k, kind)
    meta = {"pca_k": prepared.k, "data_digest": prepared.digest}
    if kind is ModelKind.QNN_BASELINE:
        meta.update(feature_map_reps=spec.feature_map_reps, ansatz_reps=spec.ansatz_reps)

    if kind is ModelKind.MLP:
        widths = (prepared.k,) + spec.layer_widths
        start = time.perf_counter()
        model, history = mlp_train(
            MlpModel.init(widths, cfg.seed + SEED_OFFSET_MLP),
            prepared.features,
            prepared.labels,
            cfg.mlp_epochs,
            cfg.mlp_learning_rate,
        )
        wall = time.perf_counter() - start
        values, frozen, optimizer = model.to_vector(), np.zeros(0), "gradient-descent"
    else:
        result = train(
            spec,
            prepared.features,
            prepared.labels,
            TrainConfig(
                iterations=cfg.budget,
                seed=cfg.seed,
                loss_kind=cfg.loss,
                trust_region_initial=cfg.trust_region_initial,
                trust_region_final=cfg.trust_region_final,
            ),
        )
        history, wall, optimizer = result.log, result.wall_time_seconds, result.optimizer
        values, frozen = result.trainable, result.frozen

    pf = ParameterFile(kind, spec.layer_widths, prepared.k, cfg.seed, values, frozen, meta)
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, PARAMS_FILE), "w") as fh:
        fh.write(format_parameter_file(pf))
    with open(os.path.join(cfg.out, LOG_FILE), "w") as fh:
        fh.write(format_training_log(history, wall, optimizer))
    write_config(cfg, cfg.out)
    log.info("trained %s: %d values, final loss %.6g", kind.value, len(values), min(history) if history else float("nan"))
    return pf


def load_parameter_file(path) -> ParameterFile:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such parameter file: {path}")
    with open(path) as fh:
        return parse_parameter_file(fh.read())


def predict_rows(pf: ParameterFile, features) -> np.ndarray:
    if pf.kind is ModelKind.MLP:
        widths = (pf.num_features,) + tuple(pf.layer_widths)
        p = mlp_forward(MlpModel.from_vector(widths, pf.values), np.atleast_2d(features))
        return (p > 0.5).astype(np.int64)
    spec = pf.model_spec()
    return classify(expectation(spec, pf.model_parameters(), np.atleast_2d(features)))


def _resources_for(pf: ParameterFile, wall: Optional[float]):
    if pf.kind is ModelKind.MLP:
        return {"trainable_parameters": len(pf.values), "wall_time_seconds": wall}
    spec = pf.model_spec()
    rep = count_resources(resource_circuit(spec), trainable_parameter_count(spec))
    rep.wall_time_seconds = wall
    return rep


def cmd_evaluate(cfg: RunConfig, name: Optional[str] = None) -> dict:
    params_path = cfg.params or os.path.join(cfg.out, PARAMS_FILE)
    pf = load_parameter_file(params_path)
    test_path = _test_file(cfg)
    test = D.read_processed(test_path)
    if test.k != pf.num_features or str(test.k) != str(pf.meta.get("pca_k", test.k)):
        raise ConsistencyError(
            f"{test_path} has {test.k} features, parameters expect {pf.num_features}"
        )
    if pf.meta.get("data_digest") not in (None, test.digest):
        raise ConsistencyError(
            f"{test_path} digest {test.digest} != training digest {pf.meta['data_digest']}"
        )
    preds = predict_rows(pf, test.features)
    report = M.evaluate_predictions(preds, test.labels)
    wall = None
    log_path = os.path.join(os.path.dirname(params_path), LOG_FILE)
    if os.path.isfile(log_path):
        with open(log_path) as fh:
            wall = parse_training_log(fh.read())[1]
    doc = M.comparison_table([(name or pf.kind.value, report, _resources_for(pf, wall))])
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "metrics.json"), "w") as fh:
        fh.write(M.render_json(doc))
    return doc


COMPARE_MODELS = (
    ("MLP", ModelKind.MLP),
    ("CFFQNN", ModelKind.CFFQNN),
    ("FixedCFFQNN", ModelKind.FIXED_CFFQNN),
    ("QNN", ModelKind.QNN_BASELINE),
    ("QNN-extra-params", ModelKind.QNN_BASELINE),
)


def cmd_compare(cfg: RunConfig) -> dict:
    if not cfg.prepared:
        raise ValueError("compare needs --prepared DIR (output of 'prepare')")
    k = D.read_processed(os.path.join(cfg.prepared, TRAIN_FILE)).k
    cffqnn_params = trainable_parameter_count(_model_spec(cfg, k, "CFFQNN"))
    records = []
    for name, kind in COMPARE_MODELS:
        sub = dataclasses.replace(cfg, out=os.path.join(cfg.out, name), params=None)
        if name == "QNN-extra-params":
            sub.ansatz_reps = ansatz_reps_to_match(k, cffqnn_params)
        try:
            cmd_train(sub, kind.value)
            doc = cmd_evaluate(sub, name)
            records.append(doc["records"][0])
        except Exception as exc:  # a failed sub-run is recorded, not fatal
            log.error("%s failed: %s", name, exc)
            records.append(M.comparison_table([(name, None, None)])["records"][0])
    doc = {"fields": list(M.REPORT_FIELDS), "records": records}
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "comparison.json"), "w") as fh:
        fh.write(M.render_json(doc))
    with open(os.path.join(cfg.out, "comparison.csv"), "w") as fh:
        fh.write(M.render_csv(doc))
    write_config(cfg, cfg.out)
    return doc


def cmd_resources(cfg: RunConfig) -> dict:
    spec = _model_spec(cfg, cfg.pca_k)
    if spec.kind is ModelKind.MLP:
        raise ValueError("the MLP is not a circuit model")
    rep = count_resources(resource_circuit(spec), trainable_parameter_count(spec))
    out = {"model": spec.kind.value, "num_qubits": spec.num_qubits, **rep.to_dict()}
    return out


# --- argument parsing ----------------------------------------------------------


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file supplying any flag")
    p.add_argument("--data", help="input CSV")
    p.add_argument("--label-column")
    p.add_argument("--positive-label")
    p.add_argument("--exclude-columns", help="comma-separated columns to ignore")
    p.add_argument("--pca-k", type=int)
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--balance", action="store_const", const=True)
    p.add_argument("--model", choices=[k.value for k in ModelKind])
    p.add_argument("--topology", help="layer widths, e.g. 3,2,1")
    p.add_argument("--feature-map-reps", type=int)
    p.add_argument("--ansatz-reps", type=int)
    p.add_argument("--budget", type=int, help="optimizer evaluation budget")
    p.add_argument("--loss", choices=["BCE", "SQUARED"])
    p.add_argument("--trust-region-initial", type=float)
    p.add_argument("--trust-region-final", type=float)
    p.add_argument("--mlp-epochs", type=int)
    p.add_argument("--mlp-learning-rate", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--prepared", help="directory written by 'prepare'")
    p.add_argument("--train-file")
    p.add_argument("--test-file")
    p.add_argument("--params", help="parameter file written by 'train'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cffqnn", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("prepare", "ingest, balance, split, PCA and scale a CSV dataset"),
        ("train", "train one model on a prepared training file"),
        ("evaluate", "score a parameter file on a prepared test file"),
        ("compare", "train and evaluate all five models with a shared seed"),
        ("resources", "print the circuit resource report for a model"),
    ):
        _add_run_flags(sub.add_parser(name, help=help_))
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        cfg = resolve_config(args)
        if args.command == "prepare":
            cmd_prepare(cfg)
        elif args.command == "train":
            cmd_train(cfg)
        elif args.command == "evaluate":
            print(M.render_json(cmd_evaluate(cfg)), end="")
        elif args.command == "compare":
            print(M.render_csv(cmd_compare(cfg)), end="")
        elif args.command == "resources":
            print(json.dumps(cmd_resources(cfg), indent=2))
    except ConsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except (OptimizerError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
