"""Shared random-object generators for the test suite."""
from __future__ import annotations

import numpy as np

from qdasim.linalg import DensityOperator, HermitianOperator


def random_hermitian(rng: np.random.Generator, n: int) -> HermitianOperator:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return HermitianOperator((a + a.conj().T) / 2.0)


def random_density(rng: np.random.Generator, n: int) -> DensityOperator:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m = a @ a.conj().T
    return DensityOperator(m / np.trace(m).real)


def random_density_spectrum(
    rng: np.random.Generator, n: int, low: float = 0.5, high: float = 1.0
) -> DensityOperator:
    """Density operator with eigenvalues drawn uniform on [low, high] then normalized."""
    w = rng.uniform(low, high, size=n)
    w /= w.sum()
    q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return DensityOperator((q * w) @ q.conj().T)


def random_unit_vector(rng: np.random.Generator, n: int, real: bool = True) -> np.ndarray:
    v = rng.standard_normal(n) if real else rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)
