"""The three register-level verification protocols against pluggable provers.

A run receives k+m+1 (or N*k+m+1) N-qubit registers, discards a uniform
random m of them, keeps one uniform random survivor as the target, and tests
the rest.  Accept/reject thresholds are compared in exact rational
arithmetic so boundary equalities never flip on floating-point noise.

Registers are produced lazily, one per test; only the tiny entangled demo
path tracks a joint state across registers (total qubits capped at 12),
conditioning it on each measured outcome.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .circuits import StabilizerDecomposition
from .hamiltonians import RescaledHamiltonian
from .hypergraphs import AdaptiveStabilizerForm, HypergraphSpec, build_state
from .paulis import CapExceededError, DENSE_QUBIT_CAP, PauliString
from .single_copy import adaptive_predicate, draw_pauli_term, parity_passes
from .states import (
    BASIS_ROTATIONS,
    DenseState,
    MeasurementRecord,
    apply_pauli,
    measure_in_bases,
    mixed_state,
    overlap,
    partial_trace,
    projector_overlap,
    to_density,
)

PROTOCOLS = ("ground", "circuit", "hypergraph")

ENTANGLED_TOTAL_QUBIT_CAP = 12

# ln(2) to 50 digits, as an exact rational, so the register-count schedules
# evaluate to reproducible integers far beyond double precision.
LN2 = Fraction("0.69314718055994530941723212145817656807550013436026")


def _int_nth_root(value: int, n: int) -> int:
    """floor(value ** (1/n)) by Newton iteration on integers."""
    if value < 0:
        raise ValueError("negative radicand")
    if value == 0:
        return 0
    x = 1 << (-(-value.bit_length() // n))
    while True:
        y = ((n - 1) * x + value // x ** (n - 1)) // n
        if y >= x:
            return x
        x = y


def _nth_root_fraction(value: int, n: int, digits: int = 30) -> Fraction:
    """value ** (1/n) as a Fraction, exact when the root is an integer."""
    exact = _int_nth_root(value, n)
    if exact**n == value:
        return Fraction(exact)
    scale = 10**digits
    return Fraction(_int_nth_root(value * scale**n, n), scale)


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


@dataclass(frozen=True)
class ProtocolParams:
    """Run sizes, the deviation parameter, and their provenance mode.

    ``mode="paper"`` means the full conservative schedule; ``mode="desk"``
    are user overrides that carry no guarantee and are flagged as such.
    """

    protocol: str
    n: int
    k: int
    m: int
    epsilon: Fraction
    mode: str
    conforming: bool
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.mode not in ("desk", "paper"):
            raise ValueError("mode must be 'desk' or 'paper'")
        if self.n < 1 or self.k < 1 or self.m < 0:
            raise ValueError("need n >= 1, k >= 1, m >= 0")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie strictly between 0 and 1")

    @property
    def epsilon_float(self) -> float:
        return float(self.epsilon)

    @property
    def n_registers(self) -> int:
        per_group = self.k if self.protocol == "ground" else self.n * self.k
        return per_group + self.m + 1

    def to_jsonable(self) -> dict:
        return {
            "protocol": self.protocol,
            "n": self.n,
            "k": self.k,
            "m": self.m,
            "epsilon": str(self.epsilon),
            "epsilon_float": float(self.epsilon),
            "mode": self.mode,
            "conforming": self.conforming,
            "n_registers": self.n_registers,
            "notes": list(self.notes),
        }


def schedule_epsilon(protocol: str, n: int, k: int | None = None) -> Fraction:
    """The schedule's deviation parameter; the hypergraph one shrinks with k."""
    if protocol == "ground":
        return Fraction(1, 4 * n**2)
    if protocol == "circuit":
        return Fraction(1, 2 * n**3)
    if protocol == "hypergraph":
        if k is None:
            raise ValueError("the hypergraph epsilon needs k")
        return 1 / (4 * n * _nth_root_fraction(k**2, 7))
    raise ValueError(f"unknown protocol {protocol!r}")


def schedule_params(
    protocol: str,
    n: int,
    l1_norm: float | None = None,
    k: int | None = None,
) -> ProtocolParams:
    """Minimal conforming (epsilon, k, m) for the chosen protocol.

    ``l1_norm`` is the coefficient l1 norm that scales the ground/circuit
    schedules; the hypergraph schedule does not use it.  A user ``k`` above
    the minimum is kept (the hypergraph epsilon then shrinks with it).
    The register counts are astronomical at realistic n: they are meant to
    be reported, not executed.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    if n < 1:
        raise ValueError("n must be positive")
    notes = []
    if protocol == "ground":
        if l1_norm is None:
            raise ValueError("the ground schedule needs the coefficient l1 norm")
        eps = schedule_epsilon(protocol, n)
        k_min = _ceil(32 * Fraction(l1_norm) ** 2 * n**5)
        k_val = max(k_min, k or 0)
        m_val = _ceil(2 * n**5 * k_val**2 * LN2)
    elif protocol == "circuit":
        if l1_norm is None:
            raise ValueError("the circuit schedule needs the max l1 norm")
        eps = schedule_epsilon(protocol, n)
        k_min = _ceil(8 * Fraction(l1_norm) ** 2 * n**7)
        k_val = max(k_min, k or 0)
        m_val = _ceil(2 * n**7 * k_val**2 * LN2)
    else:
        k_min = (4 * n) ** 7
        k_val = max(k_min, k or 0)
        root = _nth_root_fraction(k_val**2, 7)
        if root.denominator != 1:
            notes.append("k**(2/7) is irrational; epsilon carries 30 digits")
        eps = schedule_epsilon(protocol, n, k_val)
        m_val = _ceil(2 * n**3 * k_val**2 * root**2 * LN2)  # k**(18/7) = k**2 * root**2
    return ProtocolParams(
        protocol=protocol,
        n=n,
        k=k_val,
        m=m_val,
        epsilon=eps,
        mode="paper",
        conforming=True,
        notes=tuple(notes),
    )


def desk_params(
    protocol: str, n: int, k: int, m: int = 0, epsilon: float | Fraction = Fraction(1, 10)
) -> ProtocolParams:
    """Arbitrary desk-scale run sizes; flagged non-conforming.

    A float epsilon is read decimally (Fraction("0.1") = 1/10), so thresholds
    stay exact rationals that match what the user typed.
    """
    eps = epsilon if isinstance(epsilon, Fraction) else Fraction(str(epsilon))
    return ProtocolParams(
        protocol=protocol,
        n=n,
        k=k,
        m=m,
        epsilon=eps,
        mode="desk",
        conforming=False,
        notes=("desk-scale parameters: no soundness guarantee is claimed",),
    )


def ground_accept_threshold(epsilon: Fraction, l1_norm: float) -> Fraction:
    return Fraction(1, 2) + epsilon / (2 * Fraction(l1_norm))


def circuit_group_threshold(epsilon: Fraction, l1_norm: float) -> Fraction:
    return Fraction(1, 2) + (1 - epsilon) / (2 * Fraction(l1_norm))


def hypergraph_group_threshold(epsilon: Fraction) -> Fraction:
    return 1 - epsilon


# ---------------------------------------------------------------------------
# Register sources


class ProductRegisters:
    """Lazy per-register states from a register-index -> state function."""

    def __init__(self, n: int, n_registers: int, state_fn: Callable[[int], DenseState]):
        self.n = n
        self.n_registers = n_registers
        self._state_fn = state_fn

    def measure(
        self, register: int, bases: str, rng: np.random.Generator
    ) -> MeasurementRecord:
        record, _ = measure_in_bases(self._state_fn(register), bases, rng)
        return record

    def register_state(self, register: int) -> DenseState:
        state = self._state_fn(register)
        if state.n != self.n:
            raise ValueError("prover produced a register of the wrong width")
        return state


class EntangledRegisters:
    """A joint pure state over all registers, conditioned as tests consume it.

    Discarding without measuring does not change any other register's
    statistics, so discarded registers are simply never touched.
    """

    def __init__(self, n: int, n_registers: int, joint_amplitudes: np.ndarray):
        total = n * n_registers
        if total > ENTANGLED_TOTAL_QUBIT_CAP:
            raise CapExceededError(
                f"entangled demo path capped at {ENTANGLED_TOTAL_QUBIT_CAP} total qubits"
            )
        psi = np.asarray(joint_amplitudes, dtype=complex).reshape(-1)
        if psi.size != 1 << total:
            raise ValueError("joint amplitude count mismatch")
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError("joint state is not normalized")
        self.n = n
        self.n_registers = n_registers
        self.total = total
        self._psi = psi / norm

    def _qubit(self, register: int, local: int) -> int:
        return register * self.n + local

    def measure(
        self, register: int, bases: str, rng: np.random.Generator
    ) -> MeasurementRecord:
        psi = self._psi.reshape([2] * self.total)
        measured = [j for j, b in enumerate(bases) if b != "I"]
        for j in measured:
            rot = BASIS_ROTATIONS[bases[j]]
            if rot is not None:
                q = self._qubit(register, j)
                psi = np.moveaxis(np.tensordot(rot, psi, axes=(1, q)), 0, q)
        full = np.abs(psi) ** 2
        axes = tuple(
            q for q in range(self.total)
            if q not in {self._qubit(register, j) for j in measured}
        )
        probs = full.sum(axis=axes).reshape(-1) if axes else full.reshape(-1)
        probs = np.clip(probs, 0.0, None)
        probs /= probs.sum()
        cum = np.cumsum(probs)
        u = rng.random()
        kidx = int(np.searchsorted(cum, u, side="right"))
        kidx = min(kidx, int(np.nonzero(probs > 0.0)[0][-1]))
        # project the joint state onto the observed outcome
        outcomes = [1] * self.n
        sel = np.ones_like(psi, dtype=bool)
        for t, j in enumerate(measured):
            bit = (kidx >> (len(measured) - 1 - t)) & 1
            outcomes[j] = 1 - 2 * bit
            index = [slice(None)] * self.total
            index[self._qubit(register, j)] = 1 - bit
            sel[tuple(index)] = False
        psi = np.where(sel, psi, 0.0)
        self._psi = (psi / np.sqrt(probs[kidx])).reshape(-1)
        return MeasurementRecord(tuple(outcomes), bases)

    def register_state(self, register: int) -> DenseState:
        joint = DenseState(self.total, self._psi)
        keep = tuple(self._qubit(register, j) for j in range(self.n))
        return partial_trace(joint, keep)


# ---------------------------------------------------------------------------
# Prover models


@dataclass(frozen=True)
class ProverModel:
    """How the registers are produced: the honest case or an adversary."""

    kind: str
    make_source: Callable[[int, np.random.Generator], object]


def honest_prover(ideal: DenseState) -> ProverModel:
    def make(n_registers, rng):
        return ProductRegisters(ideal.n, n_registers, lambda r: ideal)

    return ProverModel("honest", make)


def iid_deviated_prover(
    ideal: DenseState, epsilon_prime: float, eta: DenseState
) -> ProverModel:
    """Every register carries (1 - eps') ideal + eps' eta."""
    if not 0.0 <= epsilon_prime <= 1.0:
        raise ValueError("epsilon_prime must lie in [0, 1]")
    rho = mixed_state(
        (1.0 - epsilon_prime) * to_density(ideal).data + epsilon_prime * to_density(eta).data
    )
    state = ideal if epsilon_prime == 0.0 else rho

    def make(n_registers, rng):
        return ProductRegisters(ideal.n, n_registers, lambda r: state)

    return ProverModel("iid_deviated", make)


def coherent_error_prover(ideal: DenseState, error: PauliString) -> ProverModel:
    """Every register carries (P ideal) for a unit-coefficient Pauli P."""
    if abs(abs(error.coeff) - 1.0) > 1e-12:
        raise ValueError("the coherent error must be a unit-coefficient Pauli")
    bad = apply_pauli(ideal, error)

    def make(n_registers, rng):
        return ProductRegisters(ideal.n, n_registers, lambda r: bad)

    return ProverModel("coherent_error", make)


def classically_correlated_prover(
    states: Sequence[DenseState], weights: Sequence[float]
) -> ProverModel:
    """One shared random draw per run selects which state fills every register.

    This is the simplest non-i.i.d.-across-runs adversary: registers within a
    run are perfectly classically correlated through the shared draw.
    """
    states = list(states)
    w = np.asarray(weights, dtype=float)
    if len(states) != w.size or w.size == 0:
        raise ValueError("need one weight per state")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be a probability vector")
    cum = np.cumsum(w)

    def make(n_registers, rng):
        pick = int(np.searchsorted(cum, rng.random(), side="right"))
        pick = min(pick, len(states) - 1)
        chosen = states[pick]
        return ProductRegisters(chosen.n, n_registers, lambda r: chosen)

    return ProverModel("classically_correlated", make)


def entangled_demo_prover(
    ideal: DenseState, bad: DenseState, weight: float
) -> ProverModel:
    """A global superposition of all-registers-good and all-registers-bad.

    Only viable at toy size (n * n_registers <= 12); larger layouts raise.
    """
    if not ideal.is_pure or not bad.is_pure:
        raise ValueError("the demo superposition needs pure branch states")
    if not 0.0 <= weight <= 1.0:
        raise ValueError("weight must lie in [0, 1]")

    def make(n_registers, rng):
        good = ideal.data
        worse = bad.data
        g = np.array([1.0], dtype=complex)
        b = np.array([1.0], dtype=complex)
        for _ in range(n_registers):
            g = np.kron(g, good)
            b = np.kron(b, worse)
        joint = np.sqrt(1.0 - weight) * g + np.sqrt(weight) * b
        joint /= np.linalg.norm(joint)
        return EntangledRegisters(ideal.n, n_registers, joint)

    return ProverModel("entangled_demo", make)


# ---------------------------------------------------------------------------
# Verdicts


@dataclass(frozen=True)
class GroupResult:
    group: int
    passes: int
    trials: int
    threshold: str  # exact rational, printed as "num/den"
    comparison: str  # "<=" for the ground protocol, ">=" otherwise
    passed: bool

    def to_jsonable(self) -> dict:
        return {
            "group": self.group,
            "passes": self.passes,
            "trials": self.trials,
            "threshold": self.threshold,
            "comparison": self.comparison,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class TrialRecord:
    group: int
    trial: int
    register: int
    branch: str
    passed: bool


@dataclass(frozen=True)
class VerdictReport:
    protocol: str
    accepted: bool
    groups: tuple[GroupResult, ...]
    target_register: int
    target_fidelity: float | None
    n_registers: int
    seed: int
    params: ProtocolParams
    prover_kind: str
    trial_records: tuple[TrialRecord, ...] | None = None

    def to_jsonable(self) -> dict:
        out = {
            "protocol": self.protocol,
            "accepted": self.accepted,
            "groups": [g.to_jsonable() for g in self.groups],
            "target_register": self.target_register,
            "target_fidelity": self.target_fidelity,
            "n_registers": self.n_registers,
            "seed": self.seed,
            "params": self.params.to_jsonable(),
            "prover_kind": self.prover_kind,
        }
        return out


def choose_layout(n_registers: int, m: int, rng: np.random.Generator):
    """Uniformly discard m registers and pick one survivor as the target."""
    if m >= n_registers:
        raise ValueError("cannot discard every register")
    perm = rng.permutation(n_registers)
    return perm[:m], int(perm[m]), perm[m + 1 :]


def _run_rngs(seed: int):
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(3)]


def run_ground_protocol(
    rh: RescaledHamiltonian,
    projector: np.ndarray | None,
    prover: ProverModel,
    params: ProtocolParams,
    seed: int,
    record_trials: bool = False,
) -> VerdictReport:
    """Energy-test every surviving register; accept on a LOW pass rate.

    The pass rate estimates 1/2 + <H'>/(2*l1): low energy keeps it near 1/2,
    so the acceptance inequality is pass_rate <= 1/2 + eps/(2*l1).
    """
    if params.protocol != "ground":
        raise ValueError("params are not for the ground protocol")
    if rh.n != params.n:
        raise ValueError("Hamiltonian width does not match the parameters")
    rng_layout, rng_prover, rng_tests = _run_rngs(seed)
    n_reg = params.n_registers
    source = prover.make_source(n_reg, rng_prover)
    if source.n != params.n:
        raise ValueError("prover register width does not match the protocol")
    _, target, tested = choose_layout(n_reg, params.m, rng_layout)

    threshold = ground_accept_threshold(params.epsilon, rh.l1_norm)
    passes = 0
    records = [] if record_trials else None
    for t, reg in enumerate(tested):
        draw = draw_pauli_term(rh.terms, rh.sampling_cum, rng_tests)
        record = source.measure(int(reg), draw.bases, rng_tests)
        ok = parity_passes(record, draw.sign)
        passes += ok
        if records is not None:
            sign = "+" if draw.sign > 0 else "-"
            records.append(TrialRecord(0, t, int(reg), f"{sign}{draw.bases}", ok))

    accepted = Fraction(passes, params.k) <= threshold
    fidelity = None
    if projector is not None:
        fidelity = projector_overlap(source.register_state(target), projector)
    group = GroupResult(
        0, passes, params.k, f"{threshold.numerator}/{threshold.denominator}", "<=", accepted
    )
    return VerdictReport(
        protocol="ground",
        accepted=bool(accepted),
        groups=(group,),
        target_register=target,
        target_fidelity=fidelity,
        n_registers=n_reg,
        seed=seed,
        params=params,
        prover_kind=prover.kind,
        trial_records=tuple(records) if records is not None else None,
    )


def _run_grouped_protocol(
    protocol: str,
    params: ProtocolParams,
    prover: ProverModel,
    seed: int,
    group_threshold: Callable[[int], Fraction],
    run_trial,
    ideal: DenseState | None,
    record_trials: bool,
) -> VerdictReport:
    rng_layout, rng_prover, rng_tests = _run_rngs(seed)
    n_reg = params.n_registers
    source = prover.make_source(n_reg, rng_prover)
    if source.n != params.n:
        raise ValueError("prover register width does not match the protocol")
    _, target, rest = choose_layout(n_reg, params.m, rng_layout)
    groups = rest.reshape(params.n, params.k)

    results = []
    records = [] if record_trials else None
    all_passed = True
    for i in range(params.n):
        threshold = group_threshold(i)
        passes = 0
        for t, reg in enumerate(groups[i]):
            ok, branch = run_trial(i, int(reg), source, rng_tests)
            passes += ok
            if records is not None:
                records.append(TrialRecord(i, t, int(reg), branch, ok))
        passed = Fraction(passes, params.k) >= threshold
        all_passed &= passed
        results.append(
            GroupResult(
                i,
                passes,
                params.k,
                f"{threshold.numerator}/{threshold.denominator}",
                ">=",
                bool(passed),
            )
        )

    fidelity = None
    if ideal is not None:
        fidelity = overlap(source.register_state(target), ideal)
    return VerdictReport(
        protocol=protocol,
        accepted=bool(all_passed),
        groups=tuple(results),
        target_register=target,
        target_fidelity=fidelity,
        n_registers=n_reg,
        seed=seed,
        params=params,
        prover_kind=prover.kind,
        trial_records=tuple(records) if records is not None else None,
    )


def run_circuit_protocol(
    decomps: Sequence[StabilizerDecomposition],
    ideal: DenseState | None,
    prover: ProverModel,
    params: ProtocolParams,
    seed: int,
    record_trials: bool = False,
) -> VerdictReport:
    """Per-qubit stabilizer tests on N groups of k registers each."""
    if params.protocol != "circuit":
        raise ValueError("params are not for the circuit protocol")
    decomps = sorted(decomps, key=lambda d: d.qubit)
    if [d.qubit for d in decomps] != list(range(params.n)):
        raise ValueError("need one stabilizer decomposition per qubit")

    def trial(i, reg, source, rng):
        draw = draw_pauli_term(decomps[i].terms, decomps[i].sampling_cum, rng)
        record = source.measure(reg, draw.bases, rng)
        ok = parity_passes(record, draw.sign)
        sign = "+" if draw.sign > 0 else "-"
        return ok, f"{sign}{draw.bases}"

    return _run_grouped_protocol(
        "circuit",
        params,
        prover,
        seed,
        lambda i: circuit_group_threshold(params.epsilon, decomps[i].l1_norm),
        trial,
        ideal,
        record_trials,
    )


def run_hypergraph_protocol(
    g: HypergraphSpec,
    forms: Sequence[AdaptiveStabilizerForm],
    prover: ProverModel,
    params: ProtocolParams,
    seed: int,
    record_trials: bool = False,
) -> VerdictReport:
    """Adaptive stabilizer tests on N groups of k registers each."""
    if params.protocol != "hypergraph":
        raise ValueError("params are not for the hypergraph protocol")
    forms = sorted(forms, key=lambda f: f.vertex)
    if [f.vertex for f in forms] != list(range(params.n)) or g.n != params.n:
        raise ValueError("need one adaptive form per vertex")
    ideal = build_state(g) if g.n <= DENSE_QUBIT_CAP else None
    threshold = hypergraph_group_threshold(params.epsilon)

    def trial(i, reg, source, rng):
        form = forms[i]
        record = source.measure(reg, form.bases(), rng)
        ok, a = adaptive_predicate(record, form)
        width = len(form.projector_support)
        return ok, (f"a={a:0{width}b}" if width else "a=")

    return _run_grouped_protocol(
        "hypergraph",
        params,
        prover,
        seed,
        lambda i: threshold,
        trial,
        ideal,
        record_trials,
    )


def run_seeds(master_seed: int, n_runs: int) -> list[int]:
    """Per-run seeds derived reproducibly from one master seed."""
    rng = np.random.default_rng(master_seed)
    return [int(s) for s in rng.integers(0, 2**63 - 1, size=n_runs)]
