"""Dataset ingestion, synthetic Gaussian generation, and run-report
serialization.

CSV files carry a header of feature names plus a final ``label`` column;
labels are arbitrary strings mapped to class indices in first-appearance
order. Reports serialize as JSON with stable key order so identical seeds
reproduce byte-identical files (modulo the timestamp field).
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import DomainRejection
from .oracle import LabeledDataset

_COV_PSD_TOL = 1e-10


@dataclass(frozen=True)
class SyntheticSpec:
    """Per-class Gaussian sampling plan; the seed fully determines the output."""

    class_means: np.ndarray
    class_covariances: np.ndarray
    class_counts: tuple[int, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        means = np.atleast_2d(np.asarray(self.class_means, dtype=float))
        covs = np.asarray(self.class_covariances, dtype=float)
        if covs.ndim == 2:
            covs = np.broadcast_to(covs, (means.shape[0],) + covs.shape).copy()
        object.__setattr__(self, "class_means", means)
        object.__setattr__(self, "class_covariances", covs)
        object.__setattr__(self, "class_counts", tuple(int(m) for m in self.class_counts))
        k, n = means.shape
        if covs.shape != (k, n, n):
            raise DomainRejection(
                f"covariance stack shape {covs.shape} does not match {k} classes of dimension {n}"
            )
        if len(self.class_counts) != k:
            raise DomainRejection("class_counts length does not match the mean count")
        if any(m < 2 for m in self.class_counts):
            raise DomainRejection("every class needs at least 2 samples")
        for c in range(k):
            sym = np.max(np.abs(covs[c] - covs[c].T))
            if sym > _COV_PSD_TOL:
                raise DomainRejection(f"class {c + 1} covariance is not symmetric")
            w = np.linalg.eigvalsh((covs[c] + covs[c].T) / 2.0)
            if w[0] < -_COV_PSD_TOL:
                raise DomainRejection(
                    f"class {c + 1} covariance has negative eigenvalue {w[0]:.3e}"
                )

    @property
    def N(self) -> int:
        return self.class_means.shape[1]

    @property
    def k(self) -> int:
        return self.class_means.shape[0]


def _covariance_factor(cov: np.ndarray) -> np.ndarray:
    """Cholesky factor, falling back to an eigen-factor for semidefinite input."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(cov)
        return v * np.sqrt(np.clip(w, 0.0, None))


def generate(spec: SyntheticSpec) -> LabeledDataset:
    """Sample the per-class Gaussians with the seeded generator."""
    rng = np.random.default_rng(spec.seed)
    samples, labels = [], []
    for c in range(spec.k):
        factor = _covariance_factor(spec.class_covariances[c])
        z = rng.standard_normal((spec.class_counts[c], spec.N))
        samples.append(spec.class_means[c] + z @ factor.T)
        labels.extend([c + 1] * spec.class_counts[c])
    return LabeledDataset(
        samples=np.vstack(samples),
        labels=np.array(labels),
        label_names=tuple(str(c + 1) for c in range(spec.k)),
    )


def synthetic_preset(name: str, per_class: int = 50, seed: int = 0) -> SyntheticSpec:
    """Named benchmark layouts.

    two-gauss: two 4-d classes separated along the first axis.
    three-gauss: three overlapping 4-d classes for classifier benchmarks.
    adversarial: separation along the first axis with 10x within-class
    variance along the second, so the principal component misses the
    discriminating direction.
    """
    key = name.strip().lower()
    if key == "two-gauss":
        means = np.zeros((2, 4))
        means[0, 0], means[1, 0] = 1.5, -1.5
        covs = np.stack([np.eye(4) * 0.09] * 2)
    elif key == "three-gauss":
        means = np.array(
            [[2.5, 0.0, 0.0, 0.0], [-2.5, 0.5, 0.0, 0.0], [0.0, 2.5, 0.0, 0.0]]
        )
        covs = np.stack([np.eye(4) * 0.49] * 3)
    elif key == "adversarial":
        means = np.array([[1.0, 0.0], [-1.0, 0.0]])
        covs = np.stack([np.diag([0.16, 1.6])] * 2)
    else:
        raise DomainRejection(
            f"unknown synthetic preset {name!r}; expected two-gauss, three-gauss, "
            "or adversarial"
        )
    counts = tuple([per_class] * means.shape[0])
    return SyntheticSpec(means, covs, counts, seed=seed)


def load_csv(path) -> LabeledDataset:
    """Read a dataset; every rejection names the offending line."""
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise DomainRejection(f"{path}: file is empty")
    header = [cell.strip() for cell in rows[0]]
    if len(header) < 2 or header[-1].lower() != "label":
        raise DomainRejection(
            f"{path}: line 1: header must name feature columns plus a final 'label' column"
        )
    n = len(header) - 1
    samples, labels, order = [], [], {}
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != n + 1:
            raise DomainRejection(
                f"{path}: line {i}: expected {n + 1} cells, found {len(row)}"
            )
        values = []
        for j, cell in enumerate(row[:-1]):
            try:
                values.append(float(cell))
            except ValueError:
                raise DomainRejection(
                    f"{path}: line {i}: non-numeric feature value {cell!r} "
                    f"in column {header[j]!r}"
                ) from None
        label = row[-1].strip()
        if label not in order:
            order[label] = len(order) + 1
        samples.append(values)
        labels.append(order[label])
    if not samples:
        raise DomainRejection(f"{path}: no data rows")
    return LabeledDataset(
        samples=np.array(samples),
        labels=np.array(labels),
        label_names=tuple(order),
        feature_names=tuple(header[:-1]),
    )


def save_csv(data: LabeledDataset, path) -> None:
    """Write a dataset in the interchange layout load_csv reads back."""
    names = data.feature_names or tuple(f"f{i + 1}" for i in range(data.N))
    label_names = data.label_names or tuple(str(c) for c in range(1, data.k + 1))
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(names) + ["label"])
        for row, label in zip(data.samples, data.labels):
            writer.writerow([repr(float(v)) for v in row] + [label_names[label - 1]])


def plain(obj):
    """Recursively convert numpy containers into JSON-serializable values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"real": obj.real.tolist(), "imag": obj.imag.tolist()}
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


@dataclass(frozen=True)
class RunReport:
    """Machine-readable record of one command invocation.

    Serialization uses stable key order and shortest-round-trip float
    formatting, so numeric content survives a JSON round trip exactly.
    """

    command: str
    parameters: dict
    outputs: dict
    metrics: dict
    seed: int | None
    version: str = __version__
    timestamp: str = ""

    def to_json(self) -> str:
        payload = {
            "command": self.command,
            "parameters": plain(self.parameters),
            "outputs": plain(self.outputs),
            "metrics": plain(self.metrics),
            "seed": self.seed,
            "version": self.version,
            "timestamp": self.timestamp,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        payload = json.loads(text)
        return cls(
            command=payload["command"],
            parameters=payload["parameters"],
            outputs=payload["outputs"],
            metrics=payload["metrics"],
            seed=payload["seed"],
            version=payload["version"],
            timestamp=payload["timestamp"],
        )
