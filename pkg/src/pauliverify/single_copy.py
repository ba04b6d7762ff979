"""The three destructive single-copy tests, sampled and in closed form.

Each test measures every qubit of one register exactly once.  The sampled
path draws a Pauli term (or reads adaptive branch bits), takes one joint Born
sample, and applies an exact integer pass predicate; the closed-form path
returns the expected pass probability from dense expectations.  Both paths
are split so a protocol engine can drive the measurement itself (e.g. on an
entangled multi-register state) and reuse the same predicates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonians import RescaledHamiltonian
from .hypergraphs import AdaptiveStabilizerForm
from .circuits import StabilizerDecomposition
from .paulis import PauliString
from .states import (
    DenseState,
    MeasurementRecord,
    expectation,
    masked_pauli_expectation,
    measure_in_bases,
)


@dataclass(frozen=True)
class TestOutcome:
    """Result of one single-copy test round."""

    passed: bool
    branch: str  # sampled Pauli term, or the observed adaptive bits
    record: MeasurementRecord


@dataclass(frozen=True)
class TermDraw:
    index: int
    bases: str
    sign: int


def draw_pauli_term(
    terms: tuple[PauliString, ...], cum_weights: np.ndarray, rng: np.random.Generator
) -> TermDraw:
    """Sample one term index from the |coefficient|/l1 distribution."""
    i = int(np.searchsorted(cum_weights, rng.random(), side="right"))
    if i >= len(terms):
        i = len(terms) - 1
    t = terms[i]
    return TermDraw(i, t.axes, t.sign)


def parity_passes(record: MeasurementRecord, sign: int) -> bool:
    return record.outcome_product() == sign


# ---------------------------------------------------------------------------
# Energy test


def energy_test(
    rho: DenseState, rh: RescaledHamiltonian, rng: np.random.Generator
) -> TestOutcome:
    """Draw a term of the rescaled Hamiltonian, measure it, compare parities.

    The identity term is part of the draw (it always passes); that is what
    ties the pass probability to the full energy expectation.
    """
    draw = draw_pauli_term(rh.terms, rh.sampling_cum, rng)
    record, _ = measure_in_bases(rho, draw.bases, rng)
    passed = parity_passes(record, draw.sign)
    return TestOutcome(passed, f"{'+' if draw.sign > 0 else '-'}{draw.bases}", record)


def energy_test_exact_ppass(rho: DenseState, rh: RescaledHamiltonian) -> float:
    """1/2 + <H'>/(2 * l1)."""
    energy = sum(expectation(rho, t) for t in rh.terms)
    return 0.5 + energy / (2.0 * rh.l1_norm)


# ---------------------------------------------------------------------------
# Stabilizer test (circuit-generated states)


def stabilizer_test(
    rho: DenseState, decomp: StabilizerDecomposition, rng: np.random.Generator
) -> TestOutcome:
    draw = draw_pauli_term(decomp.terms, decomp.sampling_cum, rng)
    record, _ = measure_in_bases(rho, draw.bases, rng)
    passed = parity_passes(record, draw.sign)
    return TestOutcome(passed, f"{'+' if draw.sign > 0 else '-'}{draw.bases}", record)


def stabilizer_test_exact_ppass(
    rho: DenseState, decomp: StabilizerDecomposition
) -> float:
    """1/2 + <g_i>/(2 * l1_i)."""
    g_exp = sum(expectation(rho, t) for t in decomp.terms)
    return 0.5 + g_exp / (2.0 * decomp.l1_norm)


# ---------------------------------------------------------------------------
# Adaptive stabilizer test (hypergraph states)


def adaptive_bits_from_record(
    record: MeasurementRecord, form: AdaptiveStabilizerForm
) -> int:
    """Projector bits read off the Z outcomes: +1 -> 0, -1 -> 1."""
    a = 0
    for v in form.projector_support:
        a = (a << 1) | (record.outcomes[v] == -1)
    return a


def adaptive_predicate(
    record: MeasurementRecord, form: AdaptiveStabilizerForm
) -> tuple[bool, int]:
    """Evaluate the branch rule chosen by the observed projector bits."""
    a = adaptive_bits_from_record(record, form)
    alpha, residual = form.branch_for_bits(a)
    prod = record.outcomes[form.vertex]
    for v in residual:
        prod *= record.outcomes[v]
    return prod == (-1 if alpha else 1), a


def adaptive_stabilizer_test(
    rho: DenseState, form: AdaptiveStabilizerForm, rng: np.random.Generator
) -> TestOutcome:
    """X on the tested vertex, Z everywhere else, branch rule after the fact."""
    record, _ = measure_in_bases(rho, form.bases(), rng)
    passed, a = adaptive_predicate(record, form)
    width = len(form.projector_support)
    return TestOutcome(passed, f"a={a:0{width}b}" if width else "a=", record)


def adaptive_test_exact_ppass(
    rho: DenseState, form: AdaptiveStabilizerForm, g_dense: np.ndarray | None = None
) -> float:
    """(1 + <g_i>)/2, from a supplied dense stabilizer or from the branches."""
    if g_dense is not None:
        if rho.is_pure:
            val = float(np.real(np.vdot(rho.data, g_dense @ rho.data)))
        else:
            val = float(np.real(np.trace(g_dense @ rho.data)))
        return 0.5 * (1.0 + val)
    return adaptive_branch_sum_ppass(rho, form)


def adaptive_branch_sum_ppass(rho: DenseState, form: AdaptiveStabilizerForm) -> float:
    """Pass probability accumulated branch by branch.

    Sums (Tr[rho P_a] + Tr[rho P_a S_a])/2 over all projector assignments;
    mathematically identical to (1 + <g_i>)/2 and used to cross-validate it.
    """
    total = 0.0
    for a, alpha, residual in form.branch_table():
        fixed = {v: bit for v, bit in zip(form.projector_support, a)}
        proj = masked_pauli_expectation(
            rho, PauliString.identity(form.n), fixed_bits=fixed
        )
        xmask = 1 << (form.n - 1 - form.vertex)
        zmask = 0
        for v in residual:
            zmask |= 1 << (form.n - 1 - v)
        string = PauliString(form.n, xmask, zmask, -1.0 if alpha else 1.0)
        signed = masked_pauli_expectation(rho, string, fixed_bits=fixed)
        total += 0.5 * (proj + signed)
    return total


# ---------------------------------------------------------------------------
# Monte Carlo helper


def monte_carlo_pass_rate(test, n_trials: int, rng: np.random.Generator):
    """Run a single-copy test repeatedly; returns (rate, pass count).

    ``test`` is a callable rng -> TestOutcome.  Each trial consumes a fixed
    number of variates from ``rng``, so trial t is reproducible from the
    generator seed and t alone.
    """
    passes = 0
    for _ in range(n_trials):
        if test(rng).passed:
            passes += 1
    return passes / n_trials, passes


def binomial_sigma(p: float, n_trials: int) -> float:
    return float(np.sqrt(max(p * (1.0 - p), 0.0) / n_trials))
