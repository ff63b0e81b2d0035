"""Simulation primitives: swap-interaction exponentiation, phase estimation,
shot-sampled overlap tests, and ancilla postselection.

Joint register-system states produced by phase estimation are kept in a
factored eigenbasis form internally so wide eigenvalue registers never force
a dense (2^t * N)^2 matrix; the dense state is materialized on demand for
small systems.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainRejection, NumericalFailure
from .linalg import DensityOperator, eig_hermitian

PHASE_BITS_MIN = 2
PHASE_BITS_MAX = 12
MIN_SLICES = 5
POSTSELECT_FLOOR = 1e-12
# dense materialization cap: (dim)^2 complex entries must stay desk-sized
_MATERIALIZE_DIM_LIMIT = 4096


@dataclass(frozen=True)
class ShotResult:
    """Estimate from repeated single-shot measurements with its standard error."""

    estimate: float
    shots: int
    standard_error: float

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise DomainRejection("shots must be a positive integer")


@dataclass(frozen=True)
class _QpeFactors:
    """Factored QPE joint state: sum_{l,l'} beta[l,l'] |a_l><a_l'| x |u_l><u_l'|."""

    profiles: np.ndarray  # (N, T) register amplitude profiles a_l
    vectors: np.ndarray  # (N, N) eigenvector columns u_l
    beta: np.ndarray  # (N, N) input state in the eigenbasis

    def register_marginal(self) -> np.ndarray:
        weights = np.real(np.diag(self.beta))
        return np.maximum(weights @ (np.abs(self.profiles) ** 2), 0.0)

    def conditional_block(self, m: int) -> np.ndarray:
        """Unnormalized system block given register outcome m; trace = P(m)."""
        a = self.profiles[:, m]
        mixed = self.beta * np.outer(a, a.conj())
        return self.vectors @ mixed @ self.vectors.conj().T

    def dense(self) -> np.ndarray:
        n, t = self.profiles.shape
        k = np.empty((t * n, n), dtype=complex)
        for l in range(n):
            k[:, l] = np.kron(self.profiles[l], self.vectors[:, l])
        return k @ self.beta @ k.conj().T


class RegisteredState:
    """A density operator spread over named registers.

    ``register_layout`` orders the tensor factors; the product of register
    dimensions equals the state dimension.
    """

    def __init__(self, register_layout, state: DensityOperator | None = None, *, _factors=None):
        self.register_layout = tuple((str(n), int(d)) for n, d in register_layout)
        if len({name for name, _ in self.register_layout}) != len(self.register_layout):
            raise DomainRejection("register names must be unique")
        if any(d < 1 for _, d in self.register_layout):
            raise DomainRejection("register dimensions must be positive")
        if state is None and _factors is None:
            raise DomainRejection("a registered state needs a state")
        self._dense = state
        self._factors = _factors
        if state is not None and state.dim != self.dim:
            raise DomainRejection(
                f"register dimensions {self.dims} do not factor state dimension {state.dim}"
            )

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.register_layout)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def state(self) -> DensityOperator:
        if self._dense is None:
            if self.dim > _MATERIALIZE_DIM_LIMIT:
                raise NumericalFailure(
                    f"refusing to materialize a dense {self.dim}x{self.dim} state; "
                    "use the register-level accessors"
                )
            self._dense = DensityOperator(self._factors.dense())
        return self._dense

    def register_index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.register_layout):
            if n == name:
                return i
        raise DomainRejection(
            f"no register named {name!r}; layout has {[n for n, _ in self.register_layout]}"
        )

    def register_marginal(self, name: str) -> np.ndarray:
        """Measurement distribution of one register."""
        idx = self.register_index(name)
        if self._factors is not None and idx == 0 and self._dense is None:
            return self._factors.register_marginal()
        dims = self.dims
        r = self.state.matrix.reshape(*dims, *dims)
        n_reg = len(dims)
        probs = np.empty(dims[idx])
        for outcome in range(dims[idx]):
            sel: list = [slice(None)] * (2 * n_reg)
            sel[idx] = outcome
            sel[n_reg + idx] = outcome
            block = r[tuple(sel)]
            # trace over all remaining registers
            rest = int(np.prod([d for i, d in enumerate(dims) if i != idx]))
            probs[outcome] = np.trace(block.reshape(rest, rest)).real
        return np.maximum(probs, 0.0)


def density_exponentiation_step(
    generator: DensityOperator, target: DensityOperator, dt: float
) -> DensityOperator:
    """One swap-interaction step: Tr_1[e^{-iS dt} (generator x target) e^{iS dt}].

    Uses the closed form of the swap unitary (S^2 = I, so
    e^{-iS dt} = cos(dt) I - i sin(dt) S) together with
    Tr_1[S(A x B)] = AB, Tr_1[(A x B)S] = BA, Tr_1[S(A x B)S] = tr(B) A.
    The result equals conjugation by e^{-i generator dt} up to O(dt^2).
    """
    if generator.dim != target.dim:
        raise DomainRejection(
            f"dimension mismatch: generator {generator.dim} vs target {target.dim}"
        )
    if abs(dt) > 1.0:
        raise DomainRejection(f"|dt| must be <= 1, got {dt}")
    c, s = math.cos(dt), math.sin(dt)
    a, b = generator.matrix, target.matrix
    out = c * c * b - 1j * c * s * (a @ b - b @ a) + s * s * a
    return DensityOperator(out)


def _register_profiles(phases: np.ndarray, t: int) -> np.ndarray:
    """QPE register amplitudes a_m(phi) = (1/T) sum_tau e^{2 pi i tau (phi - m/T)}."""
    big_t = 1 << t
    m = np.arange(big_t)
    delta = phases[:, None] - m[None, :] / big_t
    num = np.sin(np.pi * big_t * delta)
    den = big_t * np.sin(np.pi * delta)
    phase = np.exp(1j * np.pi * (big_t - 1) * delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        amp = np.where(np.abs(den) < 1e-14, 1.0, num / np.where(den == 0.0, 1.0, den))
    return phase * amp


def phase_estimation(
    generator: DensityOperator,
    input_state: DensityOperator,
    t: int,
    steps: int = 64,
    method: str = "exact",
) -> RegisteredState:
    """Joint eigenvalue-register x system state after t-bit phase estimation.

    Measuring the eigenvalue register yields each eigenvalue of the generator
    to t-bit precision with probability equal to the input's overlap with the
    corresponding eigenspace.

    method="exact" is the eigendecomposition reference. method="simulated"
    composes ``steps`` fixed-angle swap-interaction slices per base period in
    their coherent limit, which phase-estimates the slightly distorted
    spectrum steps * arctan(lambda tan(2 pi / steps)) / (2 pi); the
    distortion vanishes quadratically in 1/steps. At steps = 64 the register
    shift stays below a twentieth of a bin for t <= 5.
    """
    if not PHASE_BITS_MIN <= t <= PHASE_BITS_MAX:
        raise DomainRejection(
            f"phase register width t={t} outside [{PHASE_BITS_MIN}, {PHASE_BITS_MAX}]"
        )
    if generator.dim != input_state.dim:
        raise DomainRejection("generator and input dimensions differ")
    sol = eig_hermitian(generator)
    w = np.clip(sol.eigenvalues, 0.0, None)
    if sol.eigenvalues[0] >= 1.0:
        raise DomainRejection(
            f"generator spectrum reaches {sol.eigenvalues[0]:.6g}; rescale eigenvalues "
            "into [0, 1) first (e.g. multiply the operator by 1 - 2**-t)"
        )
    if method == "exact":
        phases = w
    elif method == "simulated":
        if steps < MIN_SLICES:
            raise DomainRejection(f"need at least {MIN_SLICES} slices, got {steps}")
        delta = 2.0 * np.pi / steps
        phases = steps * np.arctan(w * np.tan(delta)) / (2.0 * np.pi)
    else:
        raise DomainRejection(f"unknown phase-estimation method {method!r}")
    beta = sol.eigenvectors.conj().T @ input_state.matrix @ sol.eigenvectors
    factors = _QpeFactors(
        profiles=_register_profiles(phases, t),
        vectors=sol.eigenvectors,
        beta=beta,
    )
    layout = (("eigenvalue", 1 << t), ("system", generator.dim))
    return RegisteredState(layout, _factors=factors)


@dataclass(frozen=True)
class EigenSample:
    """One distinct register outcome with its post-measurement system vector."""

    eigenvalue: float
    vector: np.ndarray
    frequency: float
    register_value: int
    probability: float  # exact-path marginal of this outcome


def _fix_vector_sign(v: np.ndarray) -> np.ndarray:
    pivot = int(np.argmax(np.abs(v)))
    phase = v[pivot] / abs(v[pivot]) if abs(v[pivot]) > 0 else 1.0
    return v / phase


def sample_eigenpairs(
    joint: RegisteredState, draws: int, seed=None
) -> list[EigenSample]:
    """Sample the eigenvalue register and return post-measurement eigenvector
    estimates with empirical frequencies, sorted by descending eigenvalue."""
    if draws < 1:
        raise DomainRejection("draws must be a positive integer")
    names = [n for n, _ in joint.register_layout]
    if names[:1] != ["eigenvalue"] or joint._factors is None:
        raise DomainRejection("joint state was not produced by phase_estimation")
    probs = joint._factors.register_marginal()
    total = probs.sum()
    if total <= 0.0:
        raise NumericalFailure("register marginal vanished")
    probs = probs / total
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(draws, probs)
    big_t = probs.size
    samples = []
    for m in np.nonzero(counts)[0]:
        block = joint._factors.conditional_block(int(m))
        p_m = float(np.trace(block).real)
        if p_m <= POSTSELECT_FLOOR:
            continue
        wv, vv = np.linalg.eigh(block / p_m)
        samples.append(
            EigenSample(
                eigenvalue=m / big_t,
                vector=_fix_vector_sign(vv[:, -1]),
                frequency=counts[m] / draws,
                register_value=int(m),
                probability=float(probs[m]),
            )
        )
    samples.sort(key=lambda s: (-s.eigenvalue, -s.frequency, s.register_value))
    return samples


def _validate_state_vector(v: np.ndarray, require_real: bool = False) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > 1e-8:
        raise DomainRejection(f"state vector norm {norm!r} is not 1")
    if require_real and float(np.max(np.abs(v.imag))) > 1e-10:
        raise DomainRejection("signed overlap test needs real-amplitude states")
    return v


def swap_test(a, b, shots: int, seed=None) -> ShotResult:
    """Estimate |<a|b>|^2 from the swap-test acceptance rate (1 + |<a|b>|^2)/2."""
    va = _validate_state_vector(a)
    vb = _validate_state_vector(b)
    if va.size != vb.size:
        raise DomainRejection(f"dimension mismatch: {va.size} vs {vb.size}")
    if shots < 1:
        raise DomainRejection("shots must be a positive integer")
    fidelity = float(abs(np.vdot(va, vb)) ** 2)
    p_accept = 0.5 + 0.5 * fidelity
    rng = np.random.default_rng(seed)
    accepted = int(rng.binomial(shots, min(p_accept, 1.0)))
    p_hat = accepted / shots
    return ShotResult(
        estimate=2.0 * p_hat - 1.0,
        shots=shots,
        standard_error=2.0 * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / shots),
    )


def overlap_test_signed(a, b, shots: int, seed=None) -> ShotResult:
    """Estimate Re<a|b> (sign included) via an ancilla-controlled interference
    measurement with acceptance rate (1 + Re<a|b>)/2; inputs must be
    real-amplitude unit vectors."""
    va = _validate_state_vector(a, require_real=True)
    vb = _validate_state_vector(b, require_real=True)
    if va.size != vb.size:
        raise DomainRejection(f"dimension mismatch: {va.size} vs {vb.size}")
    if shots < 1:
        raise DomainRejection("shots must be a positive integer")
    overlap = float(np.real(np.vdot(va, vb)))
    p_accept = 0.5 + 0.5 * overlap
    rng = np.random.default_rng(seed)
    accepted = int(rng.binomial(shots, min(max(p_accept, 0.0), 1.0)))
    p_hat = accepted / shots
    return ShotResult(
        estimate=2.0 * p_hat - 1.0,
        shots=shots,
        standard_error=2.0 * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / shots),
    )


def postselect_ancilla(
    joint: RegisteredState, register: str, outcome: int
) -> tuple[RegisteredState, float]:
    """Project a named register onto a basis outcome and renormalize.

    Returns the conditional state on the remaining registers and the exact
    outcome probability; a branch below ``POSTSELECT_FLOOR`` is rejected.
    """
    idx = joint.register_index(register)
    dims = joint.dims
    if not 0 <= outcome < dims[idx]:
        raise DomainRejection(
            f"outcome {outcome} outside register {register!r} of dimension {dims[idx]}"
        )
    if joint._factors is not None and idx == 0 and joint._dense is None:
        block = joint._factors.conditional_block(outcome)
        prob = float(np.trace(block).real)
        if prob < POSTSELECT_FLOOR:
            raise NumericalFailure(
                f"vanishing postselection branch: P({register}={outcome}) = {prob:.3e}"
            )
        reduced = RegisteredState(joint.register_layout[1:], DensityOperator(block / prob))
        return reduced, prob
    n_reg = len(dims)
    r = joint.state.matrix.reshape(*dims, *dims)
    sel: list = [slice(None)] * (2 * n_reg)
    sel[idx] = outcome
    sel[n_reg + idx] = outcome
    rest = int(np.prod([d for i, d in enumerate(dims) if i != idx]))
    block = r[tuple(sel)].reshape(rest, rest)
    prob = float(np.trace(block).real)
    if prob < POSTSELECT_FLOOR:
        raise NumericalFailure(
            f"vanishing postselection branch: P({register}={outcome}) = {prob:.3e}"
        )
    layout = tuple(p for i, p in enumerate(joint.register_layout) if i != idx)
    if not layout:
        layout = (("scalar", 1),)
        block = np.array([[prob]])
    reduced = RegisteredState(layout, DensityOperator(block / prob))
    return reduced, prob
