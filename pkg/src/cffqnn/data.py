"""CSV ingestion, undersampling, stratified splits, Jacobi PCA and angle scaling."""

from __future__ import annotations

import csv
import hashlib
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

SEED_OFFSET_BALANCE = 0
SEED_OFFSET_SPLIT = 1

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


class DataError(ValueError):
    pass


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    column_names: List[str]
    row_ids: Optional[np.ndarray] = None  # row positions in the ingested file
    skipped_rows: int = 0

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise DataError(
                f"{self.features.shape} features do not match {len(self.labels)} labels"
            )
        if not np.all(np.isfinite(self.features)):
            raise DataError("features contain non-finite values")
        if self.row_ids is None:
            self.row_ids = np.arange(len(self.labels))

    def __len__(self) -> int:
        return len(self.labels)

    def class_counts(self) -> Tuple[int, int]:
        return int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1))

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(
            self.features[idx], self.labels[idx], list(self.column_names), self.row_ids[idx]
        )


def ingest_csv(
    path,
    label_column: str,
    positive_label_value: str,
    exclude_columns: Sequence[str] = (),
) -> Dataset:
    """Read a headed, comma-separated file; label is 1 where it equals ``positive_label_value``.

    Rows with a missing or non-numeric feature are dropped and counted in
    ``skipped_rows``. Columns with an empty header and no values at all (the
    artifact of a trailing comma) are ignored.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such dataset file: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if label_column not in header:
        raise DataError(f"label column {label_column!r} not in header of {path}")
    label_idx = header.index(label_column)
    excluded = set(exclude_columns)
    feat_idx = []
    for i, name in enumerate(header):
        if i == label_idx or name in excluded:
            continue
        if name == "" or name.startswith("Unnamed"):
            if all(i >= len(r) or not r[i].strip() for r in body):
                continue
        feat_idx.append(i)

    feats, labels, ids, skipped = [], [], [], 0
    for pos, r in enumerate(body):
        try:
            vals = [float(r[i]) for i in feat_idx]
            lab = r[label_idx].strip()
        except (ValueError, IndexError):
            skipped += 1
            continue
        if not lab or not all(math.isfinite(v) for v in vals):
            skipped += 1
            continue
        feats.append(vals)
        labels.append(1 if lab == positive_label_value else 0)
        ids.append(pos)
    if not feats:
        raise DataError(f"no usable rows in {path}")
    return Dataset(
        np.array(feats),
        np.array(labels),
        [header[i] for i in feat_idx],
        np.array(ids),
        skipped_rows=skipped,
    )


def balance(dataset: Dataset, seed: int) -> Dataset:
    """Undersample the majority class down to the minority count."""
    neg = np.flatnonzero(dataset.labels == 0)
    pos = np.flatnonzero(dataset.labels == 1)
    if len(neg) == 0 or len(pos) == 0:
        raise DataError("both classes must be present to balance")
    rng = np.random.default_rng(seed)
    n = min(len(neg), len(pos))
    keep = np.concatenate(
        [rng.choice(neg, n, replace=False), rng.choice(pos, n, replace=False)]
    )
    return dataset.take(np.sort(keep))


def _class_quotas(counts: Sequence[int], n_train: int) -> List[int]:
    """Largest-remainder allocation of ``n_train`` across classes."""
    total = sum(counts)
    exact = [c * n_train / total for c in counts]
    quotas = [math.floor(e) for e in exact]
    # ties on the remainder go to the larger class, then the lower label
    order = sorted(
        range(len(counts)), key=lambda k: (-(exact[k] - quotas[k]), -counts[k], k)
    )
    for k in order[: n_train - sum(quotas)]:
        quotas[k] += 1
    return quotas


def split(dataset: Dataset, train_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Stratified, seeded split with ``floor(n * train_fraction)`` training rows."""
    if not 0 < train_fraction < 1:
        raise DataError("train_fraction must lie strictly between 0 and 1")
    by_class = [np.flatnonzero(dataset.labels == c) for c in (0, 1)]
    for c, idx in enumerate(by_class):
        if len(idx) < 2:
            raise DataError(f"class {c} has {len(idx)} rows; need at least 2")
    n = len(dataset)
    n_train = math.floor(n * train_fraction + 1e-9)
    quotas = _class_quotas([len(i) for i in by_class], n_train)
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for idx, q in zip(by_class, quotas):
        q = min(max(q, 1), len(idx) - 1)
        perm = rng.permutation(idx)
        train_idx.append(perm[:q])
        test_idx.append(perm[q:])
    return (
        dataset.take(np.sort(np.concatenate(train_idx))),
        dataset.take(np.sort(np.concatenate(test_idx))),
    )


def jacobi_eigh(matrix, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors in columns,
    unsorted. Stops once the off-diagonal Frobenius norm falls below
    ``tol * ||A||_F``.
    """
    A = np.array(matrix, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise ValueError("matrix must be symmetric")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return np.zeros(n), V
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                colp, colq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * colp - s * colq
                A[:, q] = s * colp + c * colq
                rowp, rowq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rowp - s * rowq
                A[q, :] = s * rowp + c * rowq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(A).copy(), V


@dataclass
class PcaTransform:
    mean: np.ndarray
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance: np.ndarray

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.mean, self.components, self.explained_variance):
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return h.hexdigest()[:16]


def pca_fit(train_features, k: int) -> PcaTransform:
    X = np.asarray(train_features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError("PCA needs a 2-D matrix with at least two rows")
    if not 1 <= k <= X.shape[1]:
        raise DataError(f"k={k} outside 1..{X.shape[1]}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (X.shape[0] - 1)
    vals, vecs = jacobi_eigh(cov)
    order = np.argsort(-vals, kind="stable")[:k]
    comps = vecs[:, order].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaTransform(mean, comps, np.clip(vals[order], 0.0, None))


def pca_apply(transform: PcaTransform, features) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.shape[-1] != transform.mean.shape[0]:
        raise DataError(
            f"expected {transform.mean.shape[0]} columns, got {X.shape[-1]}"
        )
    return (X - transform.mean) @ transform.components.T


@dataclass
class ScaleTransform:
    minimum: np.ndarray
    maximum: np.ndarray
    low: float = 0.0
    high: float = math.pi

    def apply(self, features) -> np.ndarray:
        X = np.asarray(features, dtype=np.float64)
        span = self.maximum - self.minimum
        const = span == 0
        safe = np.where(const, 1.0, span)
        scaled = self.low + (X - self.minimum) / safe * (self.high - self.low)
        scaled = np.where(const, 0.5 * (self.low + self.high), scaled)
        return np.clip(scaled, self.low, self.high)

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.minimum, self.maximum):
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return h.hexdigest()[:16]


def scale_fit_apply(train_features, *others):
    """Min-max map to [0, pi] fit on ``train_features``; others are clamped.

    Returns ``(scaled_train, [scaled_other, ...], transform)``.
    """
    X = np.asarray(train_features, dtype=np.float64)
    if X.shape[0] == 0:
        raise DataError("cannot fit scaling on an empty set")
    tr = ScaleTransform(X.min(axis=0), X.max(axis=0))
    return tr.apply(X), [tr.apply(o) for o in others], tr


# --- full preparation pipeline and processed files ------------------------


@dataclass
class PreparedData:
    train: Dataset
    test: Dataset
    pca: PcaTransform
    scale: ScaleTransform
    seed: int
    report: Dict[str, object] = field(default_factory=dict)

    @property
    def digest(self) -> str:
        return f"{self.pca.digest()}-{self.scale.digest()}"


def prepare_dataset(
    dataset: Dataset,
    pca_k: int,
    train_fraction: float,
    seed: int,
    do_balance: bool = False,
) -> PreparedData:
    """Balance (optional), split, fit PCA on train, then scale to [0, pi]."""
    raw_counts = dataset.class_counts()
    raw_rows, skipped = len(dataset), dataset.skipped_rows
    if do_balance:
        dataset = balance(dataset, seed + SEED_OFFSET_BALANCE)
    train, test = split(dataset, train_fraction, seed + SEED_OFFSET_SPLIT)
    pca = pca_fit(train.features, pca_k)
    tr_p, te_p = pca_apply(pca, train.features), pca_apply(pca, test.features)
    tr_s, (te_s,), scale = scale_fit_apply(tr_p, te_p)
    names = [f"pc{i + 1}" for i in range(pca_k)]
    train = Dataset(tr_s, train.labels, names, train.row_ids)
    test = Dataset(te_s, test.labels, names, test.row_ids)
    report = {
        "input_rows": raw_rows,
        "input_class_counts": list(raw_counts),
        "skipped_rows": skipped,
        "balanced": do_balance,
        "balanced_rows": len(dataset) if do_balance else None,
        "train_rows": len(train),
        "test_rows": len(test),
        "train_class_counts": list(train.class_counts()),
        "test_class_counts": list(test.class_counts()),
        "pca_k": pca_k,
        "explained_variance": [float(v) for v in pca.explained_variance],
    }
    return PreparedData(train, test, pca, scale, seed, report)


@dataclass
class ProcessedFile:
    features: np.ndarray
    labels: np.ndarray
    k: int
    seed: int
    digest: str


def format_processed(features, labels, seed: int, digest: str) -> str:
    features = np.asarray(features)
    lines = [
        f"# k = {features.shape[1]}",
        f"# rows = {features.shape[0]}",
        f"# seed = {seed}",
        f"# digest = {digest}",
    ]
    for row, lab in zip(features, labels):
        lines.append(",".join(format(float(v), ".17g") for v in row) + f",{int(lab)}")
    return "\n".join(lines) + "\n"


def parse_processed(text: str) -> ProcessedFile:
    header, rows = {}, []
    for ln in text.splitlines():
        if ln.startswith("#"):
            key, _, val = ln[1:].partition("=")
            header[key.strip()] = val.strip()
        elif ln.strip():
            rows.append([float(v) for v in ln.split(",")])
    try:
        k, n = int(header["k"]), int(header["rows"])
        seed, digest = int(header["seed"]), header["digest"]
    except KeyError as exc:
        raise DataError(f"processed file header lacks {exc}") from None
    arr = np.array(rows, dtype=np.float64).reshape(len(rows), k + 1)
    if len(arr) != n:
        raise DataError(f"header says {n} rows, found {len(arr)}")
    return ProcessedFile(arr[:, :k], arr[:, k].astype(np.int64), k, seed, digest)


def write_processed(path, features, labels, seed: int, digest: str) -> None:
    with open(path, "w") as fh:
        fh.write(format_processed(features, labels, seed, digest))


def read_processed(path) -> ProcessedFile:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such processed dataset: {path}")
    with open(path) as fh:
        return parse_processed(fh.read())
