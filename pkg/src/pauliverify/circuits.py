"""Generalized stabilizers of circuit-generated states.

For |psi> = U|+>^n the qubit-i stabilizer is U X_i U^dag.  It is computed by
pushing the single term X_i through the gate list: Clifford gates map one
Pauli string to one signed string, while T/RZ/CCZ fan a term out into a small
bounded set.  The per-gate rules are not transcribed by hand; they are
derived once at import time by dense conjugation of every 1-, 2-, or 3-qubit
Pauli and an exact Pauli-basis read-off, so the table cannot drift from the
gate matrices.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from .paulis import (
    AXES,
    CapExceededError,
    DROP_THRESHOLD,
    PURE_QUBIT_CAP,
    PAULI_MATRICES,
    PauliString,
    decompose_in_pauli_basis,
    pauli_sum_dense,
)
from .states import DenseState, plus_state, pure_state

TERM_CAP_DEFAULT = 1 << 18


class DecompositionIntractableError(ValueError):
    """The pushed-through stabilizer exceeded the configured term cap."""


_SQ2 = 1.0 / math.sqrt(2.0)
GATE_MATRICES = {
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    "X": PAULI_MATRICES["X"],
    "Y": PAULI_MATRICES["Y"],
    "Z": PAULI_MATRICES["Z"],
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "CCZ": np.diag([1, 1, 1, 1, 1, 1, 1, -1]).astype(complex),
}
GATE_ARITY = {name: mat.shape[0].bit_length() - 1 for name, mat in GATE_MATRICES.items()}
GATE_ARITY["RZ"] = 1

_NAME_ALIASES = {
    "S†": "SDG",
    "SDG": "SDG",
    "SDAG": "SDG",
    "CX": "CNOT",
}


def canonical_gate_name(name: str) -> str:
    upper = name.upper()
    upper = _NAME_ALIASES.get(upper, upper)
    if upper not in GATE_ARITY:
        raise ValueError(f"unsupported gate {name!r}")
    return upper


def rz_matrix(angle: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * angle)]).astype(complex)


def _conjugation_rule(gate: np.ndarray, axes: tuple[str, ...]):
    """Exact expansion of  G P G^dag  over local Pauli strings."""
    p = PauliString.from_axes("".join(axes)).dense()
    conj = gate @ p @ gate.conj().T
    return [(t.axes, t.coeff) for t in decompose_in_pauli_basis(conj)]


def _build_tables():
    tables = {}
    for name, mat in GATE_MATRICES.items():
        arity = GATE_ARITY[name]
        table = {}
        for axes in product(AXES, repeat=arity):
            table[axes] = _conjugation_rule(mat, axes)
        tables[name] = table
    return tables


CONJUGATION_TABLES = _build_tables()


def rz_conjugation(axis: str, angle: float) -> list[tuple[str, float]]:
    """diag(1, e^{i*angle}) conjugation: X and Y rotate into each other."""
    c, s = math.cos(angle), math.sin(angle)
    if axis in ("I", "Z"):
        return [(axis, 1.0)]
    if axis == "X":
        return [("X", c), ("Y", s)]
    return [("Y", c), ("X", -s)]


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        canon = canonical_gate_name(self.name)
        object.__setattr__(self, "name", canon)
        if len(self.qubits) != GATE_ARITY[canon]:
            raise ValueError(f"{canon} acts on {GATE_ARITY[canon]} qubits")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("gate qubits must be distinct")
        if (canon == "RZ") != (self.angle is not None):
            raise ValueError("exactly the RZ gate takes an angle")

    def matrix(self) -> np.ndarray:
        return rz_matrix(self.angle) if self.name == "RZ" else GATE_MATRICES[self.name]


@dataclass(frozen=True)
class CircuitSpec:
    """An ordered gate list applied left-to-right to |+>^n."""

    n: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        for gate in self.gates:
            if min(gate.qubits, default=0) < 0 or max(gate.qubits, default=0) >= self.n:
                raise ValueError(f"gate {gate} leaves the register")


def circuit(n: int, gates) -> CircuitSpec:
    out = []
    for g in gates:
        if isinstance(g, Gate):
            out.append(g)
        else:
            name, qubits = g[0], tuple(g[1])
            angle = g[2] if len(g) > 2 else None
            out.append(Gate(name, qubits, angle))
    return CircuitSpec(n, tuple(out))


def build_circuit_state(c: CircuitSpec) -> DenseState:
    """Apply the gate list to |+>^n with dense amplitudes."""
    if c.n > PURE_QUBIT_CAP:
        raise CapExceededError(f"pure states capped at {PURE_QUBIT_CAP} qubits")
    psi = plus_state(c.n).data.reshape([2] * c.n).copy()
    for gate in c.gates:
        mat = gate.matrix().reshape([2] * (2 * len(gate.qubits)))
        in_axes = list(range(len(gate.qubits), 2 * len(gate.qubits)))
        psi = np.tensordot(mat, psi, axes=(in_axes, list(gate.qubits)))
        psi = np.moveaxis(psi, range(len(gate.qubits)), gate.qubits)
    return pure_state(psi.reshape(-1), c.n)


@dataclass(frozen=True)
class StabilizerDecomposition:
    """Pauli expansion of one generalized stabilizer U X_i U^dag."""

    n: int
    qubit: int
    terms: tuple[PauliString, ...]
    l1_norm: float
    sampling_weights: np.ndarray
    sampling_cum: np.ndarray

    def __post_init__(self):
        if abs(float(np.sum(self.sampling_weights)) - 1.0) > 1e-12:
            raise ValueError("sampling weights do not sum to 1")

    def dense(self) -> np.ndarray:
        return pauli_sum_dense(self.terms)


def _axes_at(xmask: int, zmask: int, n: int, qubits: tuple[int, ...]) -> tuple[str, ...]:
    out = []
    for q in qubits:
        bit = 1 << (n - 1 - q)
        x, z = bool(xmask & bit), bool(zmask & bit)
        out.append("Y" if x and z else "X" if x else "Z" if z else "I")
    return tuple(out)


def _write_axes(
    xmask: int, zmask: int, n: int, qubits: tuple[int, ...], axes: str
) -> tuple[int, int]:
    for q, ax in zip(qubits, axes):
        bit = 1 << (n - 1 - q)
        xmask &= ~bit
        zmask &= ~bit
        if ax in "XY":
            xmask |= bit
        if ax in "ZY":
            zmask |= bit
    return xmask, zmask


def conjugate_through_circuit(
    c: CircuitSpec,
    qubit: int,
    term_cap: int = TERM_CAP_DEFAULT,
    drop_threshold: float = DROP_THRESHOLD,
) -> StabilizerDecomposition:
    """Push X on ``qubit`` through the gate list and collect merged terms."""
    if not 0 <= qubit < c.n:
        raise ValueError(f"qubit {qubit} out of range")
    terms: dict[tuple[int, int], float] = {
        (1 << (c.n - 1 - qubit), 0): 1.0
    }
    for gate in c.gates:
        rule = (
            None
            if gate.name == "RZ"
            else CONJUGATION_TABLES[gate.name]
        )
        nxt: dict[tuple[int, int], float] = {}
        for (xm, zm), coeff in terms.items():
            local = _axes_at(xm, zm, c.n, gate.qubits)
            if gate.name == "RZ":
                expansion = rz_conjugation(local[0], gate.angle)
            else:
                expansion = rule[local]
            for new_axes, factor in expansion:
                key = _write_axes(xm, zm, c.n, gate.qubits, new_axes)
                nxt[key] = nxt.get(key, 0.0) + coeff * factor
        terms = {k: v for k, v in nxt.items() if abs(v) > drop_threshold}
        if len(terms) > term_cap:
            raise DecompositionIntractableError(
                f"stabilizer for qubit {qubit} exceeded {term_cap} Pauli terms"
            )
    ordered = sorted(
        (PauliString(c.n, x, z, v) for (x, z), v in terms.items()),
        key=lambda t: t.axes,
    )
    coeffs = np.array([t.coeff for t in ordered])
    l1 = float(np.sum(np.abs(coeffs)))
    weights = np.abs(coeffs) / l1
    return StabilizerDecomposition(
        n=c.n,
        qubit=qubit,
        terms=tuple(ordered),
        l1_norm=l1,
        sampling_weights=weights,
        sampling_cum=np.cumsum(weights),
    )


def all_stabilizer_decompositions(
    c: CircuitSpec, term_cap: int = TERM_CAP_DEFAULT
) -> list[StabilizerDecomposition]:
    return [conjugate_through_circuit(c, i, term_cap) for i in range(c.n)]


@dataclass(frozen=True)
class CircuitConditionReport:
    n: int
    l1_max: float  # max over per-qubit stabilizer l1 norms
    l1_per_qubit: tuple[float, ...]
    budget_value: float
    within_budget: bool
    distribution_materialized: bool
    l1_exactly_known: bool

    def to_jsonable(self) -> dict:
        return {
            "n_qubits": self.n,
            "l1_max": self.l1_max,
            "l1_per_qubit": list(self.l1_per_qubit),
            "budget_value": self.budget_value,
            "within_budget": self.within_budget,
            "distribution_materialized": self.distribution_materialized,
            "l1_exactly_known": self.l1_exactly_known,
        }


def check_circuit_conditions(
    decomps: list[StabilizerDecomposition], budget: float | None = None
) -> CircuitConditionReport:
    if not decomps:
        raise ValueError("no stabilizer decompositions supplied")
    n = decomps[0].n
    if sorted(d.qubit for d in decomps) != list(range(n)):
        raise ValueError("need one decomposition per qubit")
    per = tuple(d.l1_norm for d in sorted(decomps, key=lambda d: d.qubit))
    budget_value = 10.0 * n**3 if budget is None else float(budget)
    l1_max = max(per)
    return CircuitConditionReport(
        n=n,
        l1_max=l1_max,
        l1_per_qubit=per,
        budget_value=budget_value,
        within_budget=l1_max <= budget_value,
        distribution_materialized=True,
        l1_exactly_known=True,
    )


def load_circuit(source: str | Path | dict) -> CircuitSpec:
    """Read {"n_qubits": int, "gates": [{"name", "qubits", "angle"?}]}."""
    if isinstance(source, dict):
        obj = source
    else:
        obj = json.loads(Path(source).read_text())
    gates = [
        Gate(
            entry["name"],
            tuple(int(q) for q in entry["qubits"]),
            float(entry["angle"]) if entry.get("angle") is not None else None,
        )
        for entry in obj["gates"]
    ]
    return CircuitSpec(int(obj["n_qubits"]), tuple(gates))


def circuit_to_jsonable(c: CircuitSpec) -> dict:
    gates = []
    for gate in c.gates:
        entry = {"name": gate.name, "qubits": list(gate.qubits)}
        if gate.angle is not None:
            entry["angle"] = gate.angle
        gates.append(entry)
    return {"n_qubits": c.n, "gates": gates}
