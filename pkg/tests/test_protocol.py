from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from pauliverify.circuits import all_stabilizer_decompositions, build_circuit_state, circuit
from pauliverify.hamiltonians import HamiltonianSpec, exact_diagonalize, rescale
from pauliverify.hypergraphs import adaptive_form, all_adaptive_forms, build_state, hypergraph
from pauliverify.paulis import CapExceededError, PauliString
from pauliverify.protocol import (
    EntangledRegisters,
    ProtocolParams,
    choose_layout,
    circuit_group_threshold,
    classically_correlated_prover,
    coherent_error_prover,
    desk_params,
    entangled_demo_prover,
    ground_accept_threshold,
    honest_prover,
    hypergraph_group_threshold,
    iid_deviated_prover,
    run_circuit_protocol,
    run_ground_protocol,
    run_hypergraph_protocol,
    run_seeds,
    schedule_params,
)
from pauliverify.single_copy import adaptive_test_exact_ppass
from pauliverify.states import apply_pauli, computational_state, maximally_mixed


def minus_z_setup():
    h = HamiltonianSpec(
        1, (PauliString.from_axes("Z", -1.0),), ground_energy=-1.0, gap_lower_bound=2.0
    )
    return rescale(h), exact_diagonalize(h).projector


def test_schedule_worked_values():
    g = schedule_params("ground", 3, l1_norm=1.0)
    assert (g.k, g.epsilon) == (7776, Fraction(1, 36))
    c = schedule_params("circuit", 3, l1_norm=1.0)
    assert (c.k, c.epsilon) == (17496, Fraction(1, 54))
    h = schedule_params("hypergraph", 2)
    assert (h.k, h.epsilon) == (8**7, Fraction(1, 512))
    # register overheads are the exact ceil of the irrational product;
    # cross-check against an independent high-precision log(2)
    import mpmath

    mpmath.mp.dps = 60
    ln2 = mpmath.log(2)
    assert g.m == int(mpmath.ceil(2 * 3**5 * g.k**2 * ln2))
    assert c.m == int(mpmath.ceil(2 * 3**7 * c.k**2 * ln2))
    assert h.m == int(mpmath.ceil(2 * 2**3 * mpmath.mpf(h.k) ** mpmath.mpf("18/7") * ln2))


def test_schedule_scales_with_l1_norm():
    g = schedule_params("ground", 2, l1_norm=2.0)
    assert g.k == 32 * 4 * 2**5
    c = schedule_params("circuit", 2, l1_norm=2.0)
    assert c.k == 8 * 4 * 2**7


def test_schedule_k_override_keeps_minimum():
    h = schedule_params("hypergraph", 2, k=8**7 + 10)
    assert h.k == 8**7 + 10
    assert any("irrational" in note for note in h.notes)
    low = schedule_params("hypergraph", 2, k=5)
    assert low.k == 8**7


def test_params_validation():
    with pytest.raises(ValueError):
        ProtocolParams("ground", 2, 10, 0, Fraction(0), "desk", False)
    with pytest.raises(ValueError):
        ProtocolParams("ground", 2, 0, 0, Fraction(1, 4), "desk", False)
    with pytest.raises(ValueError):
        ProtocolParams("nope", 2, 10, 0, Fraction(1, 4), "desk", False)
    with pytest.raises(ValueError):
        schedule_params("ground", 3)  # missing the l1 norm


def test_thresholds_are_exact_rationals():
    thr = ground_accept_threshold(Fraction(1, 2), 1.0)
    assert thr == Fraction(3, 4)
    assert Fraction(3, 4) <= thr  # boundary equality accepts, never flips
    assert not Fraction(4, 4) <= thr
    thr = circuit_group_threshold(Fraction(1, 3), 2.0)
    assert thr == Fraction(1, 2) + Fraction(2, 3) / 4
    assert hypergraph_group_threshold(Fraction(1, 8)) == Fraction(7, 8)


def test_layout_uniform_target_chi_squared():
    rng = np.random.default_rng(99)
    n_reg, m, draws = 6, 2, 10_000
    counts = np.zeros(n_reg)
    for _ in range(draws):
        _, target, tested = choose_layout(n_reg, m, rng)
        counts[target] += 1
        assert len(tested) == n_reg - m - 1
    res = stats.chisquare(counts)
    assert res.pvalue > 1e-3
    with pytest.raises(ValueError):
        choose_layout(3, 3, rng)


def test_ground_honest_accepts_with_high_rate():
    rh, proj = minus_z_setup()
    params = desk_params("ground", 1, k=200, m=5, epsilon=0.2)
    prover = honest_prover(computational_state(1, 0))
    accepted = 0
    for seed in run_seeds(7, 40):
        rep = run_ground_protocol(rh, proj, prover, params, seed)
        accepted += rep.accepted
        assert rep.target_fidelity == pytest.approx(1.0)
    # Hoeffding floor: 1 - exp(-2 (eps/(2 l1))^2 k) ~ 0.865
    assert accepted / 40 >= 0.865 - 3 * np.sqrt(0.135 * 0.865 / 40)


def test_ground_excited_prover_rejected_deterministically():
    rh, proj = minus_z_setup()
    params = desk_params("ground", 1, k=50, m=0, epsilon=0.2)
    prover = honest_prover(computational_state(1, 1))  # orthogonal excited state
    for seed in run_seeds(11, 20):
        rep = run_ground_protocol(rh, proj, prover, params, seed)
        # every energy-test trial passes, so the low-pass-rate rule rejects
        assert rep.groups[0].passes == 50
        assert not rep.accepted
        assert rep.target_fidelity == pytest.approx(0.0)


def test_ground_single_register_boundary_convention():
    rh, proj = minus_z_setup()
    params = desk_params("ground", 1, k=1, m=0, epsilon=0.2)
    prover = honest_prover(computational_state(1, 0))
    seen = set()
    for seed in run_seeds(3, 30):
        rep = run_ground_protocol(rh, proj, prover, params, seed)
        # with one register the verdict is exactly "did the single test pass"
        assert rep.accepted == (rep.groups[0].passes == 0)
        seen.add(rep.accepted)
    assert seen == {True, False}


def test_circuit_honest_clifford_always_accepts():
    c = circuit(2, [("CZ", (0, 1))])
    decomps = all_stabilizer_decompositions(c)
    ideal = build_circuit_state(c)
    params = desk_params("circuit", 2, k=30, m=2, epsilon=0.25)
    prover = honest_prover(ideal)
    for seed in run_seeds(5, 10):
        rep = run_circuit_protocol(decomps, ideal, prover, params, seed)
        assert rep.accepted
        assert all(g.passes == 30 for g in rep.groups)
        assert rep.target_fidelity == pytest.approx(1.0)


def test_circuit_orthogonal_prover_rejected():
    c = circuit(3, [("CCZ", (0, 1, 2))])
    decomps = all_stabilizer_decompositions(c)
    ideal = build_circuit_state(c)
    bad = apply_pauli(ideal, PauliString.from_axes("ZII"))
    params = desk_params("circuit", 3, k=100, m=0, epsilon=0.1)
    prover = coherent_error_prover(ideal, PauliString.from_axes("ZII"))
    for seed in run_seeds(17, 10):
        rep = run_circuit_protocol(decomps, bad, prover, params, seed)
        assert not rep.accepted
        assert not rep.groups[0].passed


def test_hypergraph_honest_accepts_every_trial():
    g = hypergraph(4, [(0, 1, 2), (1, 2, 3), (0, 3)])
    forms = all_adaptive_forms(g)
    params = desk_params("hypergraph", 4, k=50, m=3, epsilon=0.1)
    prover = honest_prover(build_state(g))
    for seed in run_seeds(23, 10):
        rep = run_hypergraph_protocol(g, forms, prover, params, seed)
        assert rep.accepted
        assert all(grp.passes == 50 for grp in rep.groups)
        assert rep.target_fidelity == pytest.approx(1.0)


@pytest.mark.parametrize("n", [6, 8])
def test_hypergraph_honest_accepts_at_larger_widths(n):
    rng = np.random.default_rng(n)
    from itertools import combinations

    edges = [
        c
        for size in (2, 3)
        for c in combinations(range(n), size)
        if rng.random() < 0.3
    ]
    g = hypergraph(n, edges)
    forms = all_adaptive_forms(g)
    params = desk_params("hypergraph", n, k=20, m=1, epsilon=0.1)
    prover = honest_prover(build_state(g))
    for seed in run_seeds(n, 3):
        rep = run_hypergraph_protocol(g, forms, prover, params, seed)
        assert rep.accepted
        assert all(grp.passes == 20 for grp in rep.groups)


def test_pure_cap_boundary():
    from pauliverify.hypergraphs import build_state as build
    from pauliverify.states import measure_in_bases

    g16 = hypergraph(16, [(0, 1, 2), (7, 8), (13, 14, 15)])
    st = build(g16)  # 2**16 amplitudes, at the cap
    rec, prob = measure_in_bases(st, "X" + "Z" * 15, np.random.default_rng(0))
    assert len(rec.outcomes) == 16 and prob > 0
    with pytest.raises(CapExceededError):
        build(hypergraph(17, [(0, 1)]))


def test_hypergraph_phase_flip_rejected_always():
    g = hypergraph(3, [(0, 1, 2)])
    forms = all_adaptive_forms(g)
    params = desk_params("hypergraph", 3, k=40, m=0, epsilon=0.3)
    prover = coherent_error_prover(build_state(g), PauliString.from_axes("ZII"))
    for seed in run_seeds(31, 10):
        rep = run_hypergraph_protocol(g, forms, prover, params, seed)
        assert not rep.accepted
        assert rep.groups[0].passes == 0  # stabilized by the negated operator
        assert rep.target_fidelity == pytest.approx(0.0, abs=1e-12)


def test_iid_deviated_per_test_rate_formula():
    g = hypergraph(4, [(0, 1, 2), (2, 3)])
    ideal = build_state(g)
    eps_prime = 0.3
    prover = iid_deviated_prover(ideal, eps_prime, maximally_mixed(4))
    source = prover.make_source(3, np.random.default_rng(0))
    rho = source.register_state(0)
    for v in range(4):
        p = adaptive_test_exact_ppass(rho, adaptive_form(g, v))
        # eta maximally mixed makes <g_i> vanish: p = 1 - eps'/2
        assert p == pytest.approx(1 - eps_prime / 2, abs=1e-10)


def test_iid_group_rates_match_binomial_prediction():
    # pooled per-group pass counts across runs stay within 3 sigma of the
    # exact per-test rate predicted in closed form
    g = hypergraph(3, [(0, 1, 2), (0, 2)])
    forms = all_adaptive_forms(g)
    ideal = build_state(g)
    prover = iid_deviated_prover(ideal, 0.15, maximally_mixed(3))
    rho = prover.make_source(1, np.random.default_rng(0)).register_state(0)
    params = desk_params("hypergraph", 3, k=400, m=0, epsilon=0.2)
    runs = 25
    totals = np.zeros(3)
    for seed in run_seeds(67, runs):
        rep = run_hypergraph_protocol(g, forms, prover, params, seed)
        for grp in rep.groups:
            totals[grp.group] += grp.passes
    n_trials = runs * params.k
    for i, form in enumerate(forms):
        p = adaptive_test_exact_ppass(rho, form)
        sigma = np.sqrt(p * (1 - p) / n_trials)
        assert abs(totals[i] / n_trials - p) < 3 * sigma


def test_classically_correlated_prover_mixes_runs():
    g = hypergraph(3, [(0, 1, 2)])
    forms = all_adaptive_forms(g)
    good = build_state(g)
    bad = apply_pauli(good, PauliString.from_axes("ZII"))
    prover = classically_correlated_prover([good, bad], [0.5, 0.5])
    params = desk_params("hypergraph", 3, k=20, m=0, epsilon=0.2)
    verdicts = [
        run_hypergraph_protocol(g, forms, prover, params, seed).accepted
        for seed in run_seeds(41, 30)
    ]
    rate = sum(verdicts) / len(verdicts)
    assert 0.2 < rate < 0.8  # the shared coin decides each run wholesale


def test_entangled_demo_extreme_weights():
    g = hypergraph(2, [(0, 1)])
    forms = all_adaptive_forms(g)
    good = build_state(g)
    bad = apply_pauli(good, PauliString.from_axes("ZI"))
    params = desk_params("hypergraph", 2, k=2, m=1, epsilon=0.3)  # 6 registers = 12 qubits
    for seed in run_seeds(13, 5):
        rep = run_hypergraph_protocol(
            g, forms, entangled_demo_prover(good, bad, 0.0), params, seed
        )
        assert rep.accepted and rep.target_fidelity == pytest.approx(1.0)
        rep = run_hypergraph_protocol(
            g, forms, entangled_demo_prover(good, bad, 1.0), params, seed
        )
        assert not rep.accepted


def test_entangled_demo_collapses_to_branches():
    g = hypergraph(2, [(0, 1)])
    forms = all_adaptive_forms(g)
    good = build_state(g)
    bad = apply_pauli(good, PauliString.from_axes("ZI"))
    params = desk_params("hypergraph", 2, k=2, m=1, epsilon=0.3)
    prover = entangled_demo_prover(good, bad, 0.5)
    outcomes = {
        run_hypergraph_protocol(g, forms, prover, params, seed).accepted
        for seed in run_seeds(101, 24)
    }
    assert outcomes == {True, False}


def test_entangled_cap_enforced():
    with pytest.raises(CapExceededError):
        EntangledRegisters(4, 4, np.zeros(1 << 16))


def test_register_count_and_width_validation():
    g = hypergraph(2, [(0, 1)])
    forms = all_adaptive_forms(g)
    params = desk_params("hypergraph", 2, k=5, m=0, epsilon=0.2)
    wrong_width = honest_prover(build_state(hypergraph(3, [(0, 1, 2)])))
    with pytest.raises(ValueError):
        run_hypergraph_protocol(g, forms, wrong_width, params, seed=1)
    rh, proj = minus_z_setup()
    with pytest.raises(ValueError):
        run_ground_protocol(rh, proj, honest_prover(computational_state(1, 0)), params, 1)


def test_replay_is_bit_identical():
    g = hypergraph(3, [(0, 1, 2), (0, 2)])
    forms = all_adaptive_forms(g)
    prover = iid_deviated_prover(build_state(g), 0.2, maximally_mixed(3))
    params = desk_params("hypergraph", 3, k=25, m=2, epsilon=0.15)
    a = run_hypergraph_protocol(g, forms, prover, params, seed=777, record_trials=True)
    b = run_hypergraph_protocol(g, forms, prover, params, seed=777, record_trials=True)
    assert a.to_jsonable() == b.to_jsonable()
    assert a.trial_records == b.trial_records
    c = run_hypergraph_protocol(g, forms, prover, params, seed=778)
    assert c.to_jsonable() != a.to_jsonable()


def test_run_seeds_deterministic():
    assert run_seeds(5, 4) == run_seeds(5, 4)
    assert run_seeds(5, 4) != run_seeds(6, 4)
