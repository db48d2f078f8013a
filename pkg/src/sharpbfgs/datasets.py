"""Data ingestion and synthetic problem generation.

LIBSVM-format text files (1-based ascending sparse indices) are materialized
dense: the solvers are dense anyway and the benchmark datasets top out around
d=357. Synthetic generators cover the two benchmark families: seeded random
quadratics with pinned extreme eigenvalues, and separable-with-noise logistic
data.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .linalg import SpdMatrix
from .objectives import LogisticProblem, QuadraticProblem

logger = logging.getLogger(__name__)

#: Benchmark regularization defaults, keyed by recognized dataset name.
DATASET_MU = {
    "svmguide3": 0.01,
    "ijcnn1": 0.01,
    "phishing": 0.001,
    "mushrooms": 0.001,
    "a9a": 0.001,
    "connect-4": 0.0001,
    "w8a": 0.0001,
    "protein": 0.0001,
}


class ParseError(Exception):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class EmptyDataset(Exception):
    pass


@dataclass
class Dataset:
    name: str
    rows: np.ndarray
    labels: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


def _map_labels(raw: np.ndarray) -> np.ndarray:
    """Map {0,1} / {1,2} / {-1,+1} label conventions onto {-1,+1}."""
    values = set(np.unique(raw))
    if values <= {-1.0, 1.0}:
        return raw.copy()
    if values <= {0.0, 1.0}:
        return 2.0 * raw - 1.0
    if values <= {1.0, 2.0}:
        return 2.0 * raw - 3.0
    raise ParseError(0, f"unsupported label set {sorted(values)}")


def parse_libsvm(path, dim: int | None = None, name: str | None = None) -> Dataset:
    """Parse a LIBSVM text file into a dense Dataset.

    Each line is ``label idx:val idx:val ...`` with 1-based strictly
    ascending indices. The feature dimension is the largest index seen
    unless ``dim`` overrides it. Blank lines are skipped; anything else
    malformed is rejected with its line number.
    """
    entries: list[list[tuple[int, float]]] = []
    raw_labels: list[float] = []
    max_index = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            try:
                label = float(tokens[0])
            except ValueError:
                raise ParseError(line_no, f"bad label {tokens[0]!r}") from None
            feats: list[tuple[int, float]] = []
            prev = 0
            for tok in tokens[1:]:
                idx_s, _, val_s = tok.partition(":")
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise ParseError(line_no, f"bad feature token {tok!r}") from None
                if idx < 1:
                    raise ParseError(line_no, f"index {idx} is not 1-based")
                if idx <= prev:
                    raise ParseError(line_no, f"indices not ascending at {tok!r}")
                prev = idx
                feats.append((idx, val))
            max_index = max(max_index, prev)
            raw_labels.append(label)
            entries.append(feats)
    if not entries or max_index == 0:
        raise EmptyDataset(f"{path} holds no features")
    if dim is not None:
        if dim < max_index:
            raise ParseError(0, f"dim override {dim} below max index {max_index}")
        d = dim
    else:
        d = max_index
    rows = np.zeros((len(entries), d))
    for i, feats in enumerate(entries):
        for idx, val in feats:
            rows[i, idx - 1] = val
    labels = _map_labels(np.asarray(raw_labels))
    if name is None:
        name = str(path)
    return Dataset(name=name, rows=rows, labels=labels)


def write_libsvm(ds: Dataset, path) -> None:
    """Write a Dataset in LIBSVM format (zeros dropped, repr-exact values)."""
    with open(path, "w", encoding="utf-8") as fh:
        for row, label in zip(ds.rows, ds.labels):
            parts = [f"{int(label):+d}"]
            parts.extend(
                f"{j + 1}:{float(row[j])!r}" for j in range(len(row)) if row[j] != 0.0
            )
            fh.write(" ".join(parts) + "\n")


def normalize_rows(ds: Dataset) -> Dataset:
    """Scale every nonzero row to unit Euclidean norm; drop zero rows."""
    norms = np.linalg.norm(ds.rows, axis=1)
    keep = norms > 0.0
    dropped = int(np.sum(~keep))
    if dropped:
        logger.warning("dropped %d zero rows during normalization", dropped)
    rows = ds.rows[keep] / norms[keep, None]
    return Dataset(name=ds.name, rows=rows, labels=ds.labels[keep])


def synth_quadratic(d: int, kappa: float, seed: int) -> QuadraticProblem:
    """Seeded random quadratic with spectrum log-uniform in [1, kappa].

    The extreme eigenvalues are pinned to exactly 1 and kappa; the linear
    term is standard Gaussian.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if kappa < 1.0:
        raise ValueError("kappa must be >= 1")
    rng = np.random.default_rng(seed)
    if kappa == 1.0:
        a = np.eye(d)
    else:
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        evals = np.exp(np.sort(rng.uniform(0.0, np.log(kappa), d)))
        evals[0] = 1.0
        evals[-1] = kappa
        a = (q.T * evals) @ q
    b = rng.standard_normal(d)
    return QuadraticProblem(SpdMatrix(a), b, mu=1.0, lip=float(kappa))


def synth_logistic(n: int, d: int, seed: int) -> Dataset:
    """Seeded logistic benchmark data: unit-norm rows, labels from a planted
    hyperplane with 10% flip noise."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((n, d))
    w = rng.standard_normal(d)
    labels = np.sign(rows @ w)
    labels[labels == 0.0] = 1.0
    flips = rng.random(n) < 0.1
    labels[flips] *= -1.0
    ds = Dataset(name=f"synthetic-logistic-n{n}-d{d}-seed{seed}", rows=rows, labels=labels)
    return normalize_rows(ds)


def logistic_problem(ds: Dataset, mu_reg: float) -> LogisticProblem:
    return LogisticProblem(ds.rows, ds.labels, mu_reg)
