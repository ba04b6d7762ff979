"""Quantitative post-processing: distances, margins, tails, robustness.

Every reported number carries its computation mode ("exact", "monte_carlo",
or "bound") so downstream consumers never mistake a sampled rate for a
closed-form value.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import stats

from .hypergraphs import AdaptiveStabilizerForm, HypergraphSpec, build_state
from .paulis import PauliString
from .single_copy import adaptive_test_exact_ppass
from .states import (
    DenseState,
    apply_pauli,
    outcome_distribution,
    overlap,
    pure_state,
    to_density,
)
from .protocol import (
    ProtocolParams,
    hypergraph_group_threshold,
    iid_deviated_prover,
    run_hypergraph_protocol,
    run_seeds,
)

SAMPLING_HARDNESS_THRESHOLD = Fraction(1, 192)


def max_workers() -> int:
    """Worker cap for embarrassingly parallel sweeps (PAULIVERIFY_THREADS)."""
    try:
        return max(1, int(os.environ.get("PAULIVERIFY_THREADS", "1")))
    except ValueError:
        return 1


def quantity(value, mode: str, **extra) -> dict:
    """A number tagged with how it was computed."""
    if mode not in ("exact", "monte_carlo", "bound"):
        raise ValueError(f"unknown computation mode {mode!r}")
    out = {"value": value, "mode": mode}
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# Output distributions and l1 distances


def x_basis_distribution(state: DenseState) -> np.ndarray:
    """Exact Born probabilities of measuring every qubit in the X basis.

    Index bit 1 on a qubit means the -1 outcome, matching the computational
    label after the Hadamard rotation.
    """
    return outcome_distribution(state, "X" * state.n)


def iqp_output_distribution(
    g: HypergraphSpec, z_layer: Sequence[int] = ()
) -> np.ndarray:
    """X-basis distribution of the hypergraph state with a local-Z layer."""
    state = build_state(g)
    if z_layer:
        zmask = 0
        for v in z_layer:
            zmask |= 1 << (g.n - 1 - v)
        state = apply_pauli(state, PauliString(g.n, 0, zmask, 1.0))
    return x_basis_distribution(state)


@dataclass(frozen=True)
class DistributionPair:
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        for vec in (self.p, self.q):
            if np.min(vec) < -1e-12:
                raise ValueError("probabilities must be nonnegative")
            if abs(float(np.sum(vec)) - 1.0) > 1e-9:
                raise ValueError("distribution does not sum to 1")
        if self.p.shape != self.q.shape:
            raise ValueError("distributions must share a sample space")


def l1_distance(pair: DistributionPair) -> float:
    """Total l1 difference; twice the total-variation distance, in [0, 2]."""
    return float(np.sum(np.abs(pair.p - pair.q)))


# ---------------------------------------------------------------------------
# Fidelity / trace-distance bounds


@dataclass(frozen=True)
class StateBounds:
    fidelity: float
    trace_distance: float
    povm_l1_bound: float  # any POVM's outcome l1 error is at most this

    def to_jsonable(self) -> dict:
        return {
            "fidelity": quantity(self.fidelity, "exact"),
            "trace_distance": quantity(self.trace_distance, "exact"),
            "povm_l1_bound": quantity(self.povm_l1_bound, "bound"),
        }


def trace_distance_fidelity_bounds(rho: DenseState, ideal: DenseState) -> StateBounds:
    """Exact trace distance to a pure reference plus the sqrt(1-F) chain."""
    if not ideal.is_pure:
        raise ValueError("the reference state must be pure")
    fidelity = overlap(rho, ideal)
    diff = to_density(rho).data - to_density(ideal).data
    trace_distance = 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))
    if trace_distance > np.sqrt(max(1.0 - fidelity, 0.0)) + 1e-9:
        raise AssertionError("trace distance exceeded sqrt(1 - fidelity)")
    return StateBounds(fidelity, trace_distance, 2.0 * trace_distance)


# ---------------------------------------------------------------------------
# Sampling-hardness margin


@dataclass(frozen=True)
class MarginReport:
    fidelity: float
    sampler_error: float
    state_term: float  # 2*sqrt(1 - fidelity)
    total_bound: float
    threshold: float
    satisfied: bool
    note: str

    def to_jsonable(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "sampler_error": self.sampler_error,
            "state_term": quantity(self.state_term, "bound"),
            "total_bound": quantity(self.total_bound, "bound"),
            "threshold": self.threshold,
            "satisfied": self.satisfied,
            "note": self.note,
        }


def supremacy_margin(fidelity: float, sampler_error: float) -> MarginReport:
    """Total l1 bound 2*sqrt(1-F) + sampler_error against the 1/192 line."""
    if not 0.0 <= fidelity <= 1.0:
        raise ValueError("fidelity must lie in [0, 1]")
    if sampler_error < 0.0:
        raise ValueError("sampler error cannot be negative")
    state_term = 2.0 * float(np.sqrt(max(1.0 - fidelity, 0.0)))
    total = state_term + sampler_error
    threshold = float(SAMPLING_HARDNESS_THRESHOLD)
    return MarginReport(
        fidelity=fidelity,
        sampler_error=sampler_error,
        state_term=state_term,
        total_bound=total,
        threshold=threshold,
        satisfied=total <= threshold,
        note=(
            "state term instantiates the target-fidelity floor 1 - k**(-1/7) "
            "as 2*k**(-1/14) when derived from a run size k"
        ),
    )


def minimal_k_for_sampling_hardness(
    sampler_error: Fraction = Fraction(1, 193),
    threshold: Fraction = SAMPLING_HARDNESS_THRESHOLD,
) -> int:
    """Smallest run size k with 2*k**(-1/14) + sampler_error <= threshold.

    Exact integer arithmetic: k = ceil((2/t)**14) with t the error headroom.
    """
    t = threshold - Fraction(sampler_error)
    if t <= 0:
        raise ValueError("the sampler error leaves no headroom")
    k_exact = (2 / t) ** 14
    k = -((-k_exact.numerator) // k_exact.denominator)
    # verify the defining inequality exactly at k (root exact when integral)
    root = Fraction(2) / t
    if root.denominator == 1 and root.numerator**14 == k:
        assert Fraction(2, root.numerator) + sampler_error <= threshold
    return k


# ---------------------------------------------------------------------------
# Tail bounds


@dataclass(frozen=True)
class TailBounds:
    hoeffding: float  # exp(-2 t^2 k)
    exact: float  # P[K/k >= p + t] for K ~ Binomial(k, p)

    def to_jsonable(self) -> dict:
        return {
            "hoeffding": quantity(self.hoeffding, "bound"),
            "exact": quantity(self.exact, "exact"),
        }


def hoeffding_tail(k: int, t: float) -> float:
    return float(np.exp(-2.0 * float(t) ** 2 * k))


def binomial_tail_ge(k: int, p: float, threshold: Fraction) -> float:
    """P[K/k >= threshold] exactly, threshold compared as a rational."""
    m = -((-threshold.numerator * k) // threshold.denominator)  # ceil(thr*k)
    if m > k:
        return 0.0
    return float(stats.binom.sf(m - 1, k, p))

def binomial_tail_le(k: int, p: float, threshold: Fraction) -> float:
    """P[K/k <= threshold] exactly."""
    m = (threshold.numerator * k) // threshold.denominator  # floor(thr*k)
    if m < 0:
        return 0.0
    return float(stats.binom.cdf(m, k, p))


def hoeffding_calculator(p: float, k: int, t: float) -> TailBounds:
    """One-sided upward deviation bound and its exact binomial companion."""
    if t <= 0:
        raise ValueError("the deviation t must be positive")
    thr = Fraction(p) + Fraction(t)
    return TailBounds(hoeffding=hoeffding_tail(k, t), exact=binomial_tail_ge(k, p, thr))


# ---------------------------------------------------------------------------
# Robustness sweep


@dataclass(frozen=True)
class SweepPoint:
    eps_prime: float
    runs: int
    accepted: int
    acceptance_rate: float
    mc_sigma: float
    per_group_ppass: tuple[float, ...]
    predicted_acceptance: float
    bound: float
    bound_label: str
    bound_valid: bool  # the lower-bound derivation needs eps' <= eps

    def to_jsonable(self) -> dict:
        return {
            "eps_prime": self.eps_prime,
            "runs": self.runs,
            "accepted": self.accepted,
            "acceptance_rate": quantity(
                self.acceptance_rate, "monte_carlo", ci_sigma=self.mc_sigma
            ),
            "per_group_ppass": [quantity(p, "exact") for p in self.per_group_ppass],
            "predicted_acceptance": quantity(self.predicted_acceptance, "exact"),
            "bound": quantity(
                self.bound, "bound", label=self.bound_label, valid=self.bound_valid
            ),
        }


def acceptance_bound(n: int, k: int, epsilon: float, eps_prime: float) -> float:
    """1 - n * exp(-2 (eps' - eps)^2 k); can go negative, meaning vacuous.

    This is a lower bound on acceptance only while eps' <= eps: the per-test
    pass rate of the deviated state is at least 1 - eps', and the derivation
    needs it to clear the 1 - eps group threshold with margin eps - eps'.
    Callers flag points outside that regime.
    """
    return 1.0 - n * float(np.exp(-2.0 * (eps_prime - epsilon) ** 2 * k))


def _sweep_point(
    g: HypergraphSpec,
    forms: Sequence[AdaptiveStabilizerForm],
    eta: DenseState,
    eps_prime: float,
    params: ProtocolParams,
    runs: int,
    seed: int,
) -> SweepPoint:
    ideal = build_state(g)
    prover = iid_deviated_prover(ideal, eps_prime, eta)
    accepted = 0
    for s in run_seeds(seed, runs):
        accepted += run_hypergraph_protocol(g, forms, prover, params, s).accepted
    rate = accepted / runs

    source = prover.make_source(1, np.random.default_rng(0))
    rho = source.register_state(0)
    ppass = tuple(adaptive_test_exact_ppass(rho, f) for f in forms)
    threshold = hypergraph_group_threshold(params.epsilon)
    predicted = 1.0
    for p in ppass:
        predicted *= binomial_tail_ge(params.k, p, threshold)
    return SweepPoint(
        eps_prime=eps_prime,
        runs=runs,
        accepted=accepted,
        acceptance_rate=rate,
        mc_sigma=float(np.sqrt(max(predicted * (1 - predicted), 0.0) / runs)),
        per_group_ppass=ppass,
        predicted_acceptance=predicted,
        bound=acceptance_bound(params.n, params.k, float(params.epsilon), eps_prime),
        bound_label="stated",
        bound_valid=eps_prime <= float(params.epsilon),
    )


def _parallel_points(jobs, point_fn) -> list[SweepPoint]:
    workers = min(max_workers(), max(len(jobs), 1))
    if workers <= 1:
        return [point_fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: point_fn(*job), jobs))


def robustness_sweep(
    g: HypergraphSpec,
    forms: Sequence[AdaptiveStabilizerForm],
    eta: DenseState,
    eps_primes: Sequence[float],
    params: ProtocolParams,
    runs: int,
    seed: int,
) -> list[SweepPoint]:
    """Measured acceptance of deviated provers against the stated bound.

    Points are independent; PAULIVERIFY_THREADS parallelizes them without
    changing any result (each point derives its own seed chain).
    """
    point_seeds = run_seeds(seed, len(eps_primes))
    jobs = [
        (g, forms, eta, float(ep), params, runs, s)
        for ep, s in zip(eps_primes, point_seeds)
    ]
    return _parallel_points(jobs, _sweep_point)


def robustness_sweep_ground(
    rh,
    projector,
    eta: DenseState,
    eps_primes: Sequence[float],
    params: ProtocolParams,
    runs: int,
    seed: int,
) -> list[SweepPoint]:
    """Deviated-prover sweep for the ground protocol.

    The bound curve reuses the hypergraph functional form with one group; it
    is labeled "extrapolated" because no closed form is stated for this case.
    """
    from .protocol import ground_accept_threshold, run_ground_protocol
    from .single_copy import energy_test_exact_ppass

    ideal = _ground_ideal(rh)

    def point(eps_prime: float, point_seed: int) -> SweepPoint:
        prover = iid_deviated_prover(ideal, eps_prime, eta)
        accepted = 0
        for s in run_seeds(point_seed, runs):
            accepted += run_ground_protocol(rh, projector, prover, params, s).accepted
        rate = accepted / runs
        rho = prover.make_source(1, np.random.default_rng(0)).register_state(0)
        p = energy_test_exact_ppass(rho, rh)
        threshold = ground_accept_threshold(params.epsilon, rh.l1_norm)
        predicted = binomial_tail_le(params.k, p, threshold)
        return SweepPoint(
            eps_prime=eps_prime,
            runs=runs,
            accepted=accepted,
            acceptance_rate=rate,
            mc_sigma=float(np.sqrt(max(predicted * (1 - predicted), 0.0) / runs)),
            per_group_ppass=(p,),
            predicted_acceptance=predicted,
            bound=acceptance_bound(1, params.k, float(params.epsilon), eps_prime),
            bound_label="extrapolated",
            bound_valid=eps_prime <= float(params.epsilon),
        )

    point_seeds = run_seeds(seed, len(eps_primes))
    return _parallel_points(
        [(float(ep), s) for ep, s in zip(eps_primes, point_seeds)], point
    )


def robustness_sweep_circuit(
    decomps,
    ideal: DenseState,
    eta: DenseState,
    eps_primes: Sequence[float],
    params: ProtocolParams,
    runs: int,
    seed: int,
) -> list[SweepPoint]:
    """Deviated-prover sweep for the circuit protocol (extrapolated bound)."""
    from .protocol import circuit_group_threshold, run_circuit_protocol
    from .single_copy import stabilizer_test_exact_ppass

    def point(eps_prime: float, point_seed: int) -> SweepPoint:
        prover = iid_deviated_prover(ideal, eps_prime, eta)
        accepted = 0
        for s in run_seeds(point_seed, runs):
            accepted += run_circuit_protocol(
                decomps, ideal, prover, params, s
            ).accepted
        rate = accepted / runs
        rho = prover.make_source(1, np.random.default_rng(0)).register_state(0)
        ppass = tuple(stabilizer_test_exact_ppass(rho, d) for d in decomps)
        predicted = 1.0
        for p, d in zip(ppass, decomps):
            predicted *= binomial_tail_ge(
                params.k, p, circuit_group_threshold(params.epsilon, d.l1_norm)
            )
        return SweepPoint(
            eps_prime=eps_prime,
            runs=runs,
            accepted=accepted,
            acceptance_rate=rate,
            mc_sigma=float(np.sqrt(max(predicted * (1 - predicted), 0.0) / runs)),
            per_group_ppass=ppass,
            predicted_acceptance=predicted,
            bound=acceptance_bound(params.n, params.k, float(params.epsilon), eps_prime),
            bound_label="extrapolated",
            bound_valid=eps_prime <= float(params.epsilon),
        )

    point_seeds = run_seeds(seed, len(eps_primes))
    return _parallel_points(
        [(float(ep), s) for ep, s in zip(eps_primes, point_seeds)], point
    )


def _ground_ideal(rh) -> DenseState:
    """A pure state in the kernel of the rescaled Hamiltonian."""
    _, evecs = np.linalg.eigh(rh.dense())
    vec = evecs[:, 0]
    return pure_state(vec / np.linalg.norm(vec), rh.n)
