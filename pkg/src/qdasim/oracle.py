"""Oracle emulation: scatter and covariance density operators from labeled data.

The quantum-RAM oracles are emulated by exact classical state construction:
norm-weighted superpositions over stored difference vectors, and the reduced
operators obtained by tracing out the index register. No gate-level QRAM is
modeled; norms are read directly from the stored data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainRejection
from .linalg import DensityOperator

_ZERO_NORM = 1e-24


@dataclass
class LabeledDataset:
    """M real feature vectors of dimension N with class labels in 1..k.

    Every class index in 1..k must own at least one sample. ``label_names``
    optionally records the original label strings in index order (class c
    maps to ``label_names[c - 1]``).
    """

    samples: np.ndarray
    labels: np.ndarray
    label_names: tuple[str, ...] | None = None
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        self.labels = np.asarray(self.labels, dtype=int)
        if self.samples.ndim != 2:
            raise DomainRejection("samples must form an M x N matrix")
        if not np.all(np.isfinite(self.samples)):
            raise DomainRejection("samples contain non-finite entries")
        if self.labels.shape != (self.samples.shape[0],):
            raise DomainRejection(
                f"label count {self.labels.shape} does not match sample count "
                f"{self.samples.shape[0]}"
            )
        if self.labels.size == 0:
            raise DomainRejection("dataset is empty")
        k = int(self.labels.max())
        if self.labels.min() < 1:
            raise DomainRejection("class labels must be integers in 1..k")
        present = np.unique(self.labels)
        missing = sorted(set(range(1, k + 1)) - set(present.tolist()))
        if missing:
            raise DomainRejection(f"classes {missing} have no samples")

    @property
    def M(self) -> int:
        return self.samples.shape[0]

    @property
    def N(self) -> int:
        return self.samples.shape[1]

    @property
    def k(self) -> int:
        return int(self.labels.max())

    def class_members(self, c: int) -> np.ndarray:
        return self.samples[self.labels == c]


@dataclass(frozen=True)
class ClassStatistics:
    """Per-class means and the squared-norm totals that weight the oracles.

    ``norm_between`` is sum_c ||mu_c - xbar||^2, ``norm_within`` is
    sum_j ||x_j - mu_{c_j}||^2, and ``per_class_norm[c-1]`` is the within-class
    share of class c.
    """

    class_means: np.ndarray
    global_mean: np.ndarray
    class_counts: np.ndarray
    norm_between: float
    norm_within: float
    per_class_norm: np.ndarray


def class_statistics(data: LabeledDataset) -> ClassStatistics:
    """Arithmetic class means, the global sample mean, and the weight norms."""
    k = data.k
    means = np.empty((k, data.N))
    counts = np.empty(k, dtype=int)
    per_class = np.empty(k)
    within = 0.0
    for c in range(1, k + 1):
        members = data.class_members(c)
        counts[c - 1] = members.shape[0]
        means[c - 1] = members.mean(axis=0)
        dev = members - means[c - 1]
        per_class[c - 1] = float(np.sum(dev * dev))
        within += per_class[c - 1]
    global_mean = data.samples.mean(axis=0)
    d = means - global_mean
    between = float(np.sum(d * d))
    return ClassStatistics(
        class_means=means,
        global_mean=global_mean,
        class_counts=counts,
        norm_between=between,
        norm_within=within,
        per_class_norm=per_class,
    )


def _weighted_projector_mixture(deviations: np.ndarray, total: float) -> DensityOperator:
    """Unit-trace mixture (1/total) sum_i d_i d_i^T; zero rows carry no weight."""
    acc = np.zeros((deviations.shape[1], deviations.shape[1]))
    for d in deviations:
        acc += np.outer(d, d)
    return DensityOperator(acc / total)


def between_scatter(stats: ClassStatistics) -> DensityOperator:
    """Norm-weighted mixture of class-mean deviation projectors, unit trace."""
    if stats.norm_between <= _ZERO_NORM:
        raise DomainRejection(
            "all class means coincide with the global mean; "
            "no between-class direction exists"
        )
    return _weighted_projector_mixture(
        stats.class_means - stats.global_mean, stats.norm_between
    )


def within_scatter(data: LabeledDataset, stats: ClassStatistics) -> DensityOperator:
    """Norm-weighted mixture of centered-sample projectors, unit trace."""
    if stats.norm_within <= _ZERO_NORM:
        raise DomainRejection("every sample equals its class mean; no within-class spread")
    deviations = data.samples - stats.class_means[data.labels - 1]
    return _weighted_projector_mixture(deviations, stats.norm_within)


def class_covariance_operator(
    data: LabeledDataset, stats: ClassStatistics, c: int
) -> DensityOperator:
    """Unit-trace covariance operator of one class.

    Equals the partial trace of the class superposition projector over its
    index register; constructed directly as the weighted projector mixture.
    """
    if not 1 <= c <= data.k:
        raise DomainRejection(f"class index {c} outside 1..{data.k}")
    a_c = float(stats.per_class_norm[c - 1])
    if a_c <= _ZERO_NORM:
        raise DomainRejection(
            f"class {c} has zero within-class spread; covariance operator undefined"
        )
    deviations = data.class_members(c) - stats.class_means[c - 1]
    return _weighted_projector_mixture(deviations, a_c)


def weighted_superposition(vectors) -> np.ndarray:
    """Joint index x component state sum_i ||v_i|| |i>|v_i / ||v_i||>, normalized.

    Tracing the projector of this state over the index register reproduces
    the corresponding weighted scatter operator. Zero vectors are skipped
    (they carry zero amplitude); an all-zero input is rejected.
    """
    arr = np.atleast_2d(np.asarray(vectors, dtype=float))
    if arr.ndim != 2:
        raise DomainRejection("vectors must share a common dimension")
    total = float(np.sum(arr * arr))
    if total <= _ZERO_NORM:
        raise DomainRejection("all vectors are zero; no superposition exists")
    return (arr / np.sqrt(total)).reshape(-1).astype(complex)
