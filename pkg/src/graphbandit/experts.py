"""Regression expert pool: CSV ingestion, kernel ridge training, and
per-round loss generation from prediction errors.

The pool is always nine experts: five RBF kernel ridge models (bandwidths
0.01, 0.1, 1, 10, 100), three Laplacian kernel ridge models (bandwidths
0.01, 1, 100), and one ordinary least-squares model.  Kernel ridge solves
(G + ridge * I) a = y on the training prefix with ridge = 1 by default.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IngestError

__all__ = [
    "Dataset",
    "KernelRidgeExpert",
    "LinearExpert",
    "DatasetBundle",
    "kernel_eval",
    "load_csv",
    "train_expert_pool",
    "prediction_loss",
    "build_dataset_bundle",
    "save_pool",
    "load_pool",
    "RBF_BANDWIDTHS",
    "LAPLACIAN_BANDWIDTHS",
]

RBF_BANDWIDTHS = (1e-2, 1e-1, 1.0, 10.0, 100.0)
LAPLACIAN_BANDWIDTHS = (1e-2, 1.0, 100.0)
POOL_SIZE = len(RBF_BANDWIDTHS) + len(LAPLACIAN_BANDWIDTHS) + 1

# Gram solves stay at desk scale; larger prefixes are subsampled evenly.
MAX_KERNEL_TRAIN_ROWS = 500


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus targets normalized into [0, 1]; the first
    ``split`` fraction of rows (file order, no shuffle) is the training
    prefix for the expert pool."""

    features: np.ndarray
    targets: np.ndarray
    split: float = 0.10

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=float)
        targets = np.asarray(self.targets, dtype=float)
        if features.ndim != 2 or targets.ndim != 1 or features.shape[0] != targets.shape[0]:
            raise ValueError(f"bad dataset shapes: features {features.shape}, targets {targets.shape}")
        if features.shape[0] < 20:
            raise ValueError(f"dataset needs at least 20 rows, got {features.shape[0]}")
        if not (np.isfinite(features).all() and np.isfinite(targets).all()):
            raise ValueError("dataset contains non-finite values")
        if (targets < 0).any() or (targets > 1).any():
            raise ValueError("targets must lie in [0, 1]; pass normalize=True when loading")
        if not 0 < self.split < 1:
            raise ValueError(f"split must be in (0, 1), got {self.split}")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "targets", targets)

    @property
    def num_rows(self) -> int:
        return self.features.shape[0]

    @property
    def train_count(self) -> int:
        return int(self.num_rows * self.split + 1e-9)

    def training_rows(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.train_count
        return self.features[:n], self.targets[:n]

    def evaluation_rows(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.train_count
        return self.features[n:], self.targets[n:]


def kernel_eval(kind: str, sigma: float, x1, x2) -> float:
    """Kernel value between two feature vectors.

    RBF: exp(-||x1 - x2||^2 / (2 sigma^2)); Laplacian: exp(-||x1 - x2||_1 / sigma).
    """
    if sigma <= 0:
        raise ValueError(f"bandwidth must be positive, got {sigma}")
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape:
        raise ValueError(f"dimension mismatch: {x1.shape} vs {x2.shape}")
    if kind == "rbf":
        return float(np.exp(-np.sum((x1 - x2) ** 2) / (2 * sigma**2)))
    if kind == "laplacian":
        return float(np.exp(-np.sum(np.abs(x1 - x2)) / sigma))
    raise ValueError(f"unknown kernel kind {kind!r}")


def _kernel_matrix(kind: str, sigma: float, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if kind == "rbf":
        sq = np.sum(a**2, axis=1)[:, None] + np.sum(b**2, axis=1)[None, :] - 2.0 * (a @ b.T)
        return np.exp(-np.clip(sq, 0.0, None) / (2 * sigma**2))
    if kind == "laplacian":
        out = np.empty((a.shape[0], b.shape[0]))
        step = max(1, 2**22 // max(b.shape[0] * a.shape[1], 1))  # keep the abs-diff block small
        for start in range(0, a.shape[0], step):
            block = a[start : start + step]
            out[start : start + step] = np.exp(
                -np.abs(block[:, None, :] - b[None, :, :]).sum(axis=2) / sigma
            )
        return out
    raise ValueError(f"unknown kernel kind {kind!r}")


@dataclass(frozen=True)
class KernelRidgeExpert:
    kind: str
    bandwidth: float
    train_features: np.ndarray
    coef: np.ndarray

    def predict(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return _kernel_matrix(self.kind, self.bandwidth, x, self.train_features) @ self.coef

    def describe(self) -> str:
        return f"{self.kind}(sigma={self.bandwidth:g})"


@dataclass(frozen=True)
class LinearExpert:
    coef: np.ndarray
    intercept: float

    def predict(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return x @ self.coef + self.intercept

    def describe(self) -> str:
        return "linear"


def load_csv(path, target_column, normalize: bool = True, split: float = 0.10) -> Dataset:
    """Ingest a regression CSV.

    ``target_column`` is a header name or a 0-based column position.  With
    ``normalize`` the features are min-max scaled per column over the whole
    file, while the target is min-max scaled by the *training prefix* min/max
    and then clipped to [0, 1] (no lookahead).  Without it values are taken
    verbatim, and out-of-range targets are rejected.  Rows with non-numeric
    cells abort the load with their line numbers.
    """
    path = Path(path)
    with path.open(newline="") as handle:
        raw_rows = [row for row in csv.reader(handle) if row]
    if not raw_rows:
        raise IngestError(f"{path}: empty file")

    header: list[str] | None = None
    try:
        [float(cell) for cell in raw_rows[0]]
    except ValueError:
        header = [cell.strip() for cell in raw_rows[0]]
        raw_rows = raw_rows[1:]
    if not raw_rows:
        raise IngestError(f"{path}: no data rows")

    width = len(raw_rows[0])
    if isinstance(target_column, str):
        if header is None:
            raise IngestError(f"{path}: target column {target_column!r} named but the file has no header")
        if target_column not in header:
            raise IngestError(f"{path}: no column named {target_column!r}; header is {header}")
        target_idx = header.index(target_column)
    else:
        target_idx = int(target_column)
        if not 0 <= target_idx < width:
            raise IngestError(f"{path}: target column {target_idx} out of range for {width} columns")

    values = np.empty((len(raw_rows), width))
    bad_lines: list[int] = []
    offset = 2 if header is not None else 1
    for r, row in enumerate(raw_rows):
        if len(row) != width:
            bad_lines.append(r + offset)
            continue
        try:
            values[r] = [float(cell) for cell in row]
        except ValueError:
            bad_lines.append(r + offset)
    if bad_lines:
        shown = ", ".join(str(n) for n in bad_lines[:20])
        raise IngestError(f"{path}: non-numeric or ragged rows at line(s) {shown}")

    targets = values[:, target_idx]
    features = np.delete(values, target_idx, axis=1)
    if features.shape[1] == 0:
        raise IngestError(f"{path}: no feature columns besides the target")

    if normalize:
        lo = features.min(axis=0)
        span = features.max(axis=0) - lo
        span[span == 0] = 1.0
        features = (features - lo) / span
        train_n = max(int(len(targets) * split + 1e-9), 1)
        t_lo = targets[:train_n].min()
        t_span = targets[:train_n].max() - t_lo
        if t_span == 0:
            t_span = 1.0
        targets = np.clip((targets - t_lo) / t_span, 0.0, 1.0)
    try:
        return Dataset(features=features, targets=targets, split=split)
    except ValueError as exc:
        raise IngestError(f"{path}: {exc}") from exc


def _fit_kernel_ridge(kind: str, bandwidth: float, x: np.ndarray, y: np.ndarray, ridge: float) -> KernelRidgeExpert:
    gram = _kernel_matrix(kind, bandwidth, x, x)
    coef = np.linalg.solve(gram + ridge * np.eye(len(x)), y)
    return KernelRidgeExpert(kind=kind, bandwidth=bandwidth, train_features=x.copy(), coef=coef)


def _fit_linear(x: np.ndarray, y: np.ndarray) -> LinearExpert:
    design = np.hstack([x, np.ones((len(x), 1))])
    sol, *_ = np.linalg.lstsq(design, y, rcond=None)
    return LinearExpert(coef=sol[:-1], intercept=float(sol[-1]))


def train_expert_pool(dataset: Dataset, ridge: float = 1.0, max_kernel_rows: int = MAX_KERNEL_TRAIN_ROWS) -> list:
    """Train the nine-expert pool on the dataset's training prefix.

    Kernel models see at most ``max_kernel_rows`` prefix rows (evenly
    subsampled when the prefix is larger); the linear model uses the full
    prefix.  Deterministic.
    """
    x, y = dataset.training_rows()
    if len(y) < 10:
        raise ValueError(f"training prefix has {len(y)} rows; need at least 10")
    if len(y) > max_kernel_rows:
        keep = np.linspace(0, len(y) - 1, max_kernel_rows).round().astype(int)
        kx, ky = x[keep], y[keep]
    else:
        kx, ky = x, y
    pool: list = []
    for bandwidth in RBF_BANDWIDTHS:
        pool.append(_fit_kernel_ridge("rbf", bandwidth, kx, ky, ridge))
    for bandwidth in LAPLACIAN_BANDWIDTHS:
        pool.append(_fit_kernel_ridge("laplacian", bandwidth, kx, ky, ridge))
    pool.append(_fit_linear(x, y))
    return pool


def prediction_loss(model, x, y: float) -> float:
    """Squared prediction error clipped into [0, 1] (what the learners see)."""
    if not 0 <= y <= 1:
        raise ValueError(f"target must be in [0, 1], got {y}")
    err = float(model.predict(x)[0]) - y
    return float(np.clip(err * err, 0.0, 1.0))


@dataclass(frozen=True)
class DatasetBundle:
    """Everything the harness needs to run learners over a dataset: per-expert
    predictions on the evaluation rows, the true targets, and the clipped
    squared-error loss table the environment serves."""

    predictions: np.ndarray  # (K, T)
    truths: np.ndarray  # (T,)
    loss_table: np.ndarray  # (T, K)
    expert_names: tuple[str, ...]

    @property
    def horizon(self) -> int:
        return self.truths.size

    @property
    def num_experts(self) -> int:
        return self.predictions.shape[0]


def build_dataset_bundle(dataset: Dataset, pool) -> DatasetBundle:
    x, y = dataset.evaluation_rows()
    if len(y) < 1:
        raise ValueError("no evaluation rows after the training prefix")
    predictions = np.stack([model.predict(x) for model in pool])
    squared = (predictions - y[None, :]) ** 2
    return DatasetBundle(
        predictions=predictions,
        truths=y,
        loss_table=np.clip(squared, 0.0, 1.0).T,
        expert_names=tuple(model.describe() for model in pool),
    )


def save_pool(pool, path) -> None:
    """Serialize a trained pool (coefficients, training features, metadata)."""
    arrays = {}
    meta = []
    for idx, model in enumerate(pool):
        if isinstance(model, KernelRidgeExpert):
            meta.append({"kind": model.kind, "bandwidth": model.bandwidth})
            arrays[f"coef_{idx}"] = model.coef
            arrays[f"train_{idx}"] = model.train_features
        elif isinstance(model, LinearExpert):
            meta.append({"kind": "linear", "intercept": model.intercept})
            arrays[f"coef_{idx}"] = model.coef
        else:
            raise ValueError(f"cannot serialize expert of type {type(model).__name__}")
    np.savez(path, meta=json.dumps(meta), **arrays)


def load_pool(path) -> list:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        pool = []
        for idx, entry in enumerate(meta):
            if entry["kind"] == "linear":
                pool.append(LinearExpert(coef=data[f"coef_{idx}"], intercept=float(entry["intercept"])))
            else:
                pool.append(
                    KernelRidgeExpert(
                        kind=entry["kind"],
                        bandwidth=float(entry["bandwidth"]),
                        train_features=data[f"train_{idx}"],
                        coef=data[f"coef_{idx}"],
                    )
                )
    return pool
