"""Dense pure/mixed states, Pauli expectations, and Born sampling.

States are immutable after construction.  Per-state measurement tables
(rotated outcome distributions, keyed by the basis string) are memoized on
the instance, which makes repeated single-shot sampling of the same state in
the same bases cheap.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .paulis import (
    CapExceededError,
    DENSE_QUBIT_CAP,
    PURE_QUBIT_CAP,
    PauliString,
    sign_vector,
)

PURE_NORM_TOL = 1e-10
TRACE_TOL = 1e-10
HERMITICITY_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-10

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
_SDG = np.array([[1.0, 0.0], [0.0, -1.0j]], dtype=complex)
# Rotation that maps the measured eigenbasis onto the computational basis.
BASIS_ROTATIONS = {"X": _H, "Y": _H @ _SDG, "Z": None, "I": None}


@dataclass(frozen=True, eq=False)
class DenseState:
    """An n-qubit state: amplitude vector (pure) or density matrix (mixed)."""

    n: int
    data: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def dim(self) -> int:
        return 1 << self.n


def pure_state(amplitudes, n: int | None = None) -> DenseState:
    amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if n is None:
        n = amps.size.bit_length() - 1
    if 1 << n != amps.size:
        raise ValueError("amplitude count is not 2**n")
    if n > PURE_QUBIT_CAP:
        raise CapExceededError(f"pure states capped at {PURE_QUBIT_CAP} qubits")
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > PURE_NORM_TOL:
        raise ValueError(f"state norm {norm} is not 1 within {PURE_NORM_TOL}")
    amps = amps.copy()
    amps.flags.writeable = False
    return DenseState(n, amps)


def mixed_state(rho, n: int | None = None) -> DenseState:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if n is None:
        n = rho.shape[0].bit_length() - 1
    if 1 << n != rho.shape[0]:
        raise ValueError("matrix dimension is not 2**n")
    if n > DENSE_QUBIT_CAP:
        raise CapExceededError(f"density matrices capped at {DENSE_QUBIT_CAP} qubits")
    if abs(np.trace(rho) - 1.0) > TRACE_TOL:
        raise ValueError("trace is not 1 within tolerance")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL:
        raise ValueError("density matrix is not Hermitian within tolerance")
    if np.min(np.linalg.eigvalsh(rho)) < EIGENVALUE_FLOOR:
        raise ValueError("density matrix has a negative eigenvalue")
    rho = rho.copy()
    rho.flags.writeable = False
    return DenseState(n, rho)


def plus_state(n: int) -> DenseState:
    return pure_state(np.full(1 << n, 1.0 / np.sqrt(1 << n), dtype=complex), n)


def computational_state(n: int, index: int) -> DenseState:
    amps = np.zeros(1 << n, dtype=complex)
    amps[index] = 1.0
    return pure_state(amps, n)


def maximally_mixed(n: int) -> DenseState:
    dim = 1 << n
    return mixed_state(np.eye(dim, dtype=complex) / dim, n)


def random_pure_state(n: int, rng: np.random.Generator) -> DenseState:
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return pure_state(amps / np.linalg.norm(amps), n)


def random_mixed_state(
    n: int, rng: np.random.Generator, rank: int | None = None
) -> DenseState:
    dim = 1 << n
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return mixed_state(rho / np.trace(rho).real, n)


def to_density(state: DenseState) -> DenseState:
    if not state.is_pure:
        return state
    if state.n > DENSE_QUBIT_CAP:
        raise CapExceededError(f"density matrices capped at {DENSE_QUBIT_CAP} qubits")
    return mixed_state(np.outer(state.data, state.data.conj()), state.n)


def _check_width(state: DenseState, n: int):
    if state.n != n:
        raise ValueError(f"state is on {state.n} qubits, operator on {n}")


def apply_pauli(state: DenseState, p: PauliString) -> DenseState:
    """coeff * (P |psi>) for pure states; P rho P^dag (coeff-free) for mixed.

    The pure result is deliberately not re-validated: the coefficient scales
    the norm.  Mixed states are conjugated, where the coefficient would only
    contribute |coeff|^2, so it is ignored.
    """
    _check_width(state, p.n)
    idx = np.arange(state.dim, dtype=np.int64)
    perm = idx ^ p.xmask
    signs = sign_vector(state.dim, p.zmask)
    if state.is_pure:
        phase = p.coeff * (1j) ** p.y_count
        out = phase * (signs * state.data)[perm]
        return DenseState(state.n, out)
    out = state.data[np.ix_(perm, perm)] * np.outer(signs[perm], signs[perm])
    return DenseState(state.n, out)


def expectation(state: DenseState, p: PauliString) -> float:
    """coeff * Tr[rho tau]; the tiny imaginary residue is clamped."""
    _check_width(state, p.n)
    idx = np.arange(state.dim, dtype=np.int64)
    signs = sign_vector(state.dim, p.zmask)
    if state.is_pure:
        val = np.sum(np.conj(state.data[idx ^ p.xmask]) * signs * state.data)
    else:
        val = np.sum(signs * state.data[idx, idx ^ p.xmask])
    val = p.coeff * (1j) ** p.y_count * val
    return float(val.real)


def masked_pauli_expectation(
    state: DenseState, p: PauliString, fixed_bits: dict[int, int]
) -> float:
    """Tr[rho P_proj tau] where P_proj fixes computational bits of some qubits.

    ``fixed_bits`` maps qubit -> required bit value; the Pauli ``p`` must act
    as I or Z on those qubits (the projector and the string must commute
    qubitwise), which all callers in this package guarantee.
    """
    _check_width(state, p.n)
    idx = np.arange(state.dim, dtype=np.int64)
    sel_mask = 0
    sel_val = 0
    for q, b in fixed_bits.items():
        bit = 1 << (state.n - 1 - q)
        if p.xmask & bit:
            raise ValueError("projector clashes with an X/Y axis")
        sel_mask |= bit
        sel_val |= bit * b
    keep = (idx & sel_mask) == sel_val
    signs = sign_vector(state.dim, p.zmask)
    if state.is_pure:
        val = np.sum(
            np.conj(state.data[idx[keep] ^ p.xmask]) * signs[keep] * state.data[keep]
        )
    else:
        val = np.sum(signs[keep] * state.data[idx[keep], idx[keep] ^ p.xmask])
    val = p.coeff * (1j) ** p.y_count * val
    return float(val.real)


def overlap(state: DenseState, reference: DenseState) -> float:
    """<ref|rho|ref> for a pure reference state."""
    if not reference.is_pure:
        raise ValueError("reference must be pure")
    _check_width(state, reference.n)
    if state.is_pure:
        return float(abs(np.vdot(reference.data, state.data)) ** 2)
    return float(np.real(reference.data.conj() @ state.data @ reference.data))


def projector_overlap(state: DenseState, projector: np.ndarray) -> float:
    """Tr[Pi rho] for a dense projector."""
    if state.is_pure:
        return float(np.real(np.vdot(state.data, projector @ state.data)))
    return float(np.real(np.trace(projector @ state.data)))


def partial_trace(state: DenseState, keep: tuple[int, ...]) -> DenseState:
    """Reduced density matrix over ``keep`` (given in ascending qubit order)."""
    if not state.is_pure:
        raise ValueError("partial_trace is implemented for pure joint states")
    keep = tuple(keep)
    drop = [q for q in range(state.n) if q not in keep]
    psi = state.data.reshape([2] * state.n)
    psi = np.transpose(psi, list(keep) + drop)
    mat = psi.reshape(1 << len(keep), -1)
    return mixed_state(mat @ mat.conj().T, len(keep))


@dataclass(frozen=True)
class MeasurementRecord:
    """Per-qubit +-1 outcomes for one destructive measurement round.

    Qubits measured in the I "basis" are not touched and carry a forced +1.
    """

    outcomes: tuple[int, ...]
    bases: str

    def outcome_product(self) -> int:
        prod = 1
        for m in self.outcomes:
            prod *= m
        return prod

    def validate(self):
        if len(self.outcomes) != len(self.bases):
            raise ValueError("outcome/basis length mismatch")
        for m, b in zip(self.outcomes, self.bases):
            if m not in (1, -1):
                raise ValueError("outcomes must be +-1")
            if b == "I" and m != 1:
                raise ValueError("unmeasured qubits must carry outcome +1")


@dataclass(frozen=True)
class _MeasurementTable:
    measured: tuple[int, ...]
    probs: np.ndarray
    cum: np.ndarray
    last_sampleable: int


def _apply_single(mat: np.ndarray, tensor: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(mat, tensor, axes=(1, axis)), 0, axis)


def _measurement_table(state: DenseState, bases: str) -> _MeasurementTable:
    cached = state._cache.get(bases)
    if cached is not None:
        return cached
    if len(bases) != state.n:
        raise ValueError("basis string length must equal the qubit count")
    measured = tuple(j for j, b in enumerate(bases) if b != "I")
    for b in bases:
        if b not in "IXYZ":
            raise ValueError(f"unknown measurement basis {b!r}")

    if state.is_pure:
        psi = state.data.reshape([2] * state.n)
        for j in measured:
            rot = BASIS_ROTATIONS[bases[j]]
            if rot is not None:
                psi = _apply_single(rot, psi, j)
        full = np.abs(psi) ** 2
    else:
        rho = state.data.reshape([2] * (2 * state.n))
        for j in measured:
            rot = BASIS_ROTATIONS[bases[j]]
            if rot is not None:
                rho = _apply_single(rot, rho, j)
                rho = _apply_single(rot.conj(), rho, state.n + j)
        diag = np.diagonal(
            rho.reshape(state.dim, state.dim)
        ).real.reshape([2] * state.n)
        full = diag

    unmeasured = tuple(j for j in range(state.n) if j not in measured)
    probs = full.sum(axis=unmeasured) if unmeasured else full
    probs = np.clip(probs.reshape(-1), 0.0, None)
    probs = probs / probs.sum()
    cum = np.cumsum(probs)
    nonzero = np.nonzero(probs > 0.0)[0]
    table = _MeasurementTable(measured, probs, cum, int(nonzero[-1]))
    if len(state._cache) > 8192:
        state._cache.clear()
    state._cache[bases] = table
    return table


def outcome_distribution(state: DenseState, bases: str) -> np.ndarray:
    """Exact joint outcome distribution over the measured (non-I) qubits.

    Index bit order follows qubit order: the first measured qubit is the most
    significant bit, and bit 0 encodes outcome +1, bit 1 outcome -1.
    """
    return _measurement_table(state, bases).probs.copy()


def measure_in_bases(
    state: DenseState, bases: str, rng: np.random.Generator
) -> tuple[MeasurementRecord, float]:
    """Sample one joint outcome record from the Born distribution.

    Measured qubits are rotated into the computational basis (X via Hadamard,
    Y via the Y-eigenbasis rotation, Z directly) and a single joint bitstring
    is drawn; I qubits are not conditioned on and report +1.
    """
    table = _measurement_table(state, bases)
    u = rng.random()
    k = int(np.searchsorted(table.cum, u, side="right"))
    if k > table.last_sampleable:
        k = table.last_sampleable
    n_meas = len(table.measured)
    outcomes = [1] * state.n
    for t, q in enumerate(table.measured):
        bit = (k >> (n_meas - 1 - t)) & 1
        outcomes[q] = 1 - 2 * bit
    return MeasurementRecord(tuple(outcomes), bases), float(table.probs[k])
