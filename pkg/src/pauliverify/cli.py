"""Command-line front end.

Every subcommand echoes its seed and emits canonical JSON, so identical
invocations produce identical bytes.  Exit codes: 0 success, 1 config or
validation error (machine-readable JSON on stderr), 2 dense-simulation cap
exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis, reporting
from .circuits import (
    CircuitSpec,
    all_stabilizer_decompositions,
    build_circuit_state,
    check_circuit_conditions,
    load_circuit,
)
from .hamiltonians import (
    HamiltonianSpec,
    check_conditions,
    exact_diagonalize,
    ground_state,
    load_hamiltonian,
    rescale,
)
from .hypergraphs import (
    HypergraphSpec,
    adaptive_form,
    all_adaptive_forms,
    build_state,
    connectivity,
    hypergraph_to_jsonable,
    load_hypergraph,
    random_bms_instance,
    stabilizer_dense,
)
from .paulis import CapExceededError, DENSE_QUBIT_CAP, PauliString
from .protocol import (
    ProverModel,
    classically_correlated_prover,
    coherent_error_prover,
    desk_params,
    entangled_demo_prover,
    honest_prover,
    iid_deviated_prover,
    run_circuit_protocol,
    run_ground_protocol,
    run_hypergraph_protocol,
    run_seeds,
    schedule_epsilon,
    schedule_params,
)
from .single_copy import (
    adaptive_test_exact_ppass,
    energy_test_exact_ppass,
    stabilizer_test_exact_ppass,
)
from .states import DenseState, apply_pauli, maximally_mixed, mixed_state, to_density

# Paper-schedule register counts explode; refuse to simulate beyond this.
EXECUTABLE_REGISTER_CAP = 1_000_000


def _fresh_seed() -> int:
    return int(np.random.SeedSequence().entropy % (2**63 - 1))


def _emit(obj, out: str | None) -> None:
    text = reporting.canonical_json(obj)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Target loading


def load_target(path: str | Path):
    """Detect and load a hypergraph, Hamiltonian, or circuit JSON file."""
    obj = json.loads(Path(path).read_text())
    if "n_vertices" in obj:
        g, z_layer = load_hypergraph(obj)
        return "hypergraph", g, z_layer
    if "gates" in obj:
        return "circuit", load_circuit(obj), None
    if "terms" in obj:
        return "hamiltonian", load_hamiltonian(obj), None
    raise ValueError(f"{path}: not a hypergraph, circuit, or Hamiltonian file")


def ideal_state_of(kind: str, target) -> DenseState:
    if kind == "hypergraph":
        return build_state(target)
    if kind == "circuit":
        return build_circuit_state(target)
    return ground_state(target)


def parse_state_spec(spec: str, ideal: DenseState) -> DenseState:
    """State selectors for the ppass subcommand.

    ideal | maximally-mixed | deviated:EPS | phaseflip:QUBIT | pauli:AXES
    """
    if spec == "ideal":
        return ideal
    if spec == "maximally-mixed":
        return maximally_mixed(ideal.n)
    if spec.startswith("deviated:"):
        eps = float(spec.split(":", 1)[1])
        if not 0.0 <= eps <= 1.0:
            raise ValueError("deviation must lie in [0, 1]")
        mm = maximally_mixed(ideal.n)
        return mixed_state((1 - eps) * to_density(ideal).data + eps * mm.data)
    if spec.startswith("phaseflip:"):
        qubit = int(spec.split(":", 1)[1])
        axes = "".join("Z" if j == qubit else "I" for j in range(ideal.n))
        return apply_pauli(ideal, PauliString.from_axes(axes))
    if spec.startswith("pauli:"):
        return apply_pauli(ideal, PauliString.from_axes(spec.split(":", 1)[1]))
    raise ValueError(f"unknown state spec {spec!r}")


def _pauli_from_config(cfg: dict, n: int) -> PauliString:
    if "pauli" in cfg and len(cfg["pauli"]) == n:
        return PauliString.from_axes(cfg["pauli"])
    axis = cfg.get("pauli", "Z")
    qubit = int(cfg.get("qubit", 0))
    axes = "".join(axis if j == qubit else "I" for j in range(n))
    return PauliString.from_axes(axes)


def prover_from_config(cfg: dict, ideal: DenseState) -> ProverModel:
    kind = cfg.get("kind", "honest")
    if kind == "honest":
        return honest_prover(ideal)
    if kind == "iid_deviated":
        eta_spec = cfg.get("eta", "maximally_mixed")
        if eta_spec != "maximally_mixed":
            raise ValueError("only the maximally mixed eta is configurable here")
        return iid_deviated_prover(
            ideal, float(cfg["epsilon_prime"]), maximally_mixed(ideal.n)
        )
    if kind == "coherent_error":
        return coherent_error_prover(ideal, _pauli_from_config(cfg, ideal.n))
    if kind == "classically_correlated":
        bad = apply_pauli(ideal, _pauli_from_config(cfg, ideal.n))
        p_bad = float(cfg.get("p_bad", 0.5))
        return classically_correlated_prover([ideal, bad], [1 - p_bad, p_bad])
    if kind == "entangled_demo":
        bad = apply_pauli(ideal, _pauli_from_config(cfg, ideal.n))
        return entangled_demo_prover(ideal, bad, float(cfg.get("weight", 0.5)))
    raise ValueError(f"unknown prover kind {kind!r}")


def params_from_config(protocol: str, n: int, cfg: dict, l1_norm: float | None):
    mode = cfg.get("mode", "desk")
    if mode == "paper":
        params = schedule_params(protocol, n, l1_norm=l1_norm, k=cfg.get("k"))
        if params.n_registers > EXECUTABLE_REGISTER_CAP:
            raise ValueError(
                f"paper-mode run needs {params.n_registers} registers; "
                "that is report-only (see the params subcommand) -- use desk mode"
            )
        return params
    if mode != "desk":
        raise ValueError("params.mode must be 'desk' or 'paper'")
    if "k" not in cfg:
        raise ValueError("desk mode needs an explicit k")
    k = int(cfg["k"])
    m = int(cfg.get("m", 0))
    eps = (
        Fraction(str(float(cfg["epsilon"])))
        if "epsilon" in cfg
        else schedule_epsilon(protocol, n, k)
    )
    return desk_params(protocol, n, k=k, m=m, epsilon=eps)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_gen_hypergraph(args) -> int:
    seed = args.seed if args.seed is not None else _fresh_seed()
    g, z_layer = random_bms_instance(args.n, args.edge_prob, np.random.default_rng(seed))
    payload = hypergraph_to_jsonable(g, z_layer)
    manifest = {
        "command": "gen-hypergraph",
        "seed": seed,
        "n": args.n,
        "edge_prob": args.edge_prob,
        "n_edges": len(g.edges),
        "z_layer_size": len(z_layer),
        "out": args.out,
    }
    if args.out:
        Path(args.out).write_text(reporting.canonical_json(payload))
    else:
        manifest["hypergraph"] = payload
    sys.stdout.write(reporting.canonical_json(manifest))
    return 0


def _inspect_hypergraph(g: HypergraphSpec, z_layer) -> dict:
    xi, per_vertex = connectivity(g)
    stabilizers = []
    alpha_ever_one = False
    for v in range(g.n):
        form = adaptive_form(g, v)
        entry = {
            "vertex": v,
            "z_neighbors": list(form.z_neighbors),
            "cz_groups": [list(grp) for grp in form.cz_groups],
            "projector_support": list(form.projector_support),
        }
        if len(form.projector_support) <= 4:
            branches = []
            for a, alpha, residual in form.branch_table():
                alpha_ever_one |= bool(alpha)
                branches.append(
                    {
                        "a": "".join(str(b) for b in a),
                        "sign": "-" if alpha else "+",
                        "z_vertices": list(residual),
                    }
                )
            entry["branches"] = branches
        stabilizers.append(entry)
    return {
        "kind": "hypergraph",
        "n_qubits": g.n,
        "n_edges": len(g.edges),
        "connectivity": xi,
        "connectivity_per_vertex": per_vertex,
        "z_layer": list(z_layer or ()),
        "stabilizers": stabilizers,
        "alpha_ever_one": alpha_ever_one,
    }


def _inspect_hamiltonian(h: HamiltonianSpec, budget) -> dict:
    rh = rescale(h)
    report = check_conditions(rh, budget)
    terms = [{"pauli": t.axes, "coeff": t.coeff} for t in rh.terms[:64]]
    return {
        "kind": "hamiltonian",
        "n_qubits": h.n,
        "ground_energy_used": rh.e0_used,
        "gap_used": rh.gap_used,
        "oracle_assisted": rh.oracle_assisted,
        "l1_norm": rh.l1_norm,
        "n_terms": len(rh.terms),
        "rescaled_terms": terms,
        "terms_truncated": len(rh.terms) > 64,
        "conditions": report.to_jsonable(),
    }


def _inspect_circuit(c: CircuitSpec, budget) -> dict:
    decomps = all_stabilizer_decompositions(c)
    report = check_circuit_conditions(decomps, budget)
    stabilizers = []
    for d in decomps:
        entry = {
            "qubit": d.qubit,
            "l1_norm": d.l1_norm,
            "n_terms": len(d.terms),
        }
        if len(d.terms) <= 16:
            entry["terms"] = [{"pauli": t.axes, "coeff": t.coeff} for t in d.terms]
        stabilizers.append(entry)
    return {
        "kind": "circuit",
        "n_qubits": c.n,
        "n_gates": len(c.gates),
        "stabilizers": stabilizers,
        "conditions": report.to_jsonable(),
    }


def cmd_inspect(args) -> int:
    kind, target, z_layer = load_target(args.target)
    if kind == "hypergraph":
        out = _inspect_hypergraph(target, z_layer)
    elif kind == "hamiltonian":
        out = _inspect_hamiltonian(target, args.budget)
    else:
        out = _inspect_circuit(target, args.budget)
    out["target"] = str(args.target)
    _emit(out, args.out)
    return 0


def cmd_ppass(args) -> int:
    kind, target, _ = load_target(args.target)
    ideal = ideal_state_of(kind, target)
    state = parse_state_spec(args.state, ideal)
    result = {
        "command": "ppass",
        "target": str(args.target),
        "kind": kind,
        "state": args.state,
    }
    if kind == "hamiltonian":
        rh = rescale(target)
        result["p_pass"] = analysis.quantity(
            energy_test_exact_ppass(state, rh), "exact"
        )
        result["l1_norm"] = rh.l1_norm
    elif kind == "circuit":
        decomps = all_stabilizer_decompositions(target)
        result["p_pass_per_qubit"] = [
            analysis.quantity(stabilizer_test_exact_ppass(state, d), "exact")
            for d in decomps
        ]
        result["l1_per_qubit"] = [d.l1_norm for d in decomps]
    else:
        forms = all_adaptive_forms(target)
        result["p_pass_per_vertex"] = [
            analysis.quantity(
                adaptive_test_exact_ppass(state, f, stabilizer_dense(target, f.vertex)),
                "exact",
            )
            for f in forms
        ]
    _emit(result, args.out)
    return 0


def _run_one(kind, target, prover, params, seed, record_trials):
    if kind == "hamiltonian":
        rh = rescale(target)
        projector = (
            exact_diagonalize(target).projector if target.n <= DENSE_QUBIT_CAP else None
        )
        return run_ground_protocol(rh, projector, prover, params, seed, record_trials)
    if kind == "circuit":
        decomps = all_stabilizer_decompositions(target)
        ideal = build_circuit_state(target)
        return run_circuit_protocol(decomps, ideal, prover, params, seed, record_trials)
    forms = all_adaptive_forms(target)
    return run_hypergraph_protocol(target, forms, prover, params, seed, record_trials)


_PROTOCOL_FOR_KIND = {
    "hamiltonian": "ground",
    "circuit": "circuit",
    "hypergraph": "hypergraph",
}


def cmd_verify(args) -> int:
    config_path = Path(args.config)
    cfg = json.loads(config_path.read_text())
    if args.mode is not None:
        cfg.setdefault("params", {})["mode"] = args.mode
    target_ref = cfg["target"]
    target_path = Path(target_ref)
    if not target_path.is_absolute():
        target_path = config_path.parent / target_path
    kind, target, _ = load_target(target_path)
    protocol = cfg.get("protocol", _PROTOCOL_FOR_KIND[kind])
    if protocol != _PROTOCOL_FOR_KIND[kind]:
        raise ValueError(
            f"target file is a {kind}, which runs the "
            f"{_PROTOCOL_FOR_KIND[kind]} protocol, not {protocol!r}"
        )

    l1_norm = None
    if cfg.get("params", {}).get("mode", "desk") == "paper":
        if kind == "hamiltonian":
            l1_norm = rescale(target).l1_norm
        elif kind == "circuit":
            l1_norm = max(d.l1_norm for d in all_stabilizer_decompositions(target))
    params = params_from_config(protocol, target.n, cfg.get("params", {}), l1_norm)

    ideal = ideal_state_of(kind, target)
    prover = prover_from_config(cfg.get("prover", {"kind": "honest"}), ideal)
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if seed is None:
        seed = _fresh_seed()
    runs = args.runs
    record = args.trials_csv is not None

    reports = [
        _run_one(kind, target, prover, params, s, record)
        for s in (run_seeds(seed, runs) if runs > 1 else [seed])
    ]
    if args.trials_csv:
        rows = []
        for r_index, rep in enumerate(reports):
            rows.extend(reporting.trials_to_csv_rows(r_index, rep.trial_records))
        reporting.write_trials_csv(args.trials_csv, rows)

    manifest = {
        "command": "verify",
        "config": cfg,
        "seed": seed,
        "runs": runs,
    }
    if runs == 1:
        manifest["report"] = reports[0].to_jsonable()
    else:
        manifest["accepted_runs"] = sum(r.accepted for r in reports)
        manifest["acceptance_rate"] = sum(r.accepted for r in reports) / runs
        manifest["reports"] = [r.to_jsonable() for r in reports]
    _emit(manifest, args.out)
    return 0


def cmd_params(args) -> int:
    params = schedule_params(args.protocol, args.n, l1_norm=args.l1, k=args.k)
    _emit({"command": "params", **params.to_jsonable()}, args.out)
    return 0


def cmd_iqp_margin(args) -> int:
    if (args.fidelity is None) == (args.report is None):
        raise ValueError("give exactly one of --fidelity or --report")
    if args.report is not None:
        rep = json.loads(Path(args.report).read_text())
        node = rep.get("report", rep)
        fidelity = node.get("target_fidelity")
        if fidelity is None:
            raise ValueError("the report carries no target fidelity")
    else:
        fidelity = args.fidelity
    margin = analysis.supremacy_margin(float(fidelity), args.sampler_error)
    out = {
        "command": "iqp-margin",
        "margin": margin.to_jsonable(),
        "minimal_k": analysis.minimal_k_for_sampling_hardness(),
        "minimal_k_note": (
            "smallest run size whose soundness floor keeps "
            "2*k**(-1/14) + 1/193 within the 1/192 line"
        ),
    }
    _emit(out, args.out)
    return 0


def cmd_robustness(args) -> int:
    kind, target, _ = load_target(args.target)
    seed = args.seed if args.seed is not None else _fresh_seed()
    eps_primes = [float(x) for x in args.eps_prime.split(",") if x != ""]
    k = args.trials
    eps = (
        Fraction(str(args.epsilon))
        if args.epsilon is not None
        else schedule_epsilon(_PROTOCOL_FOR_KIND[kind], target.n, k)
    )
    params = desk_params(_PROTOCOL_FOR_KIND[kind], target.n, k=k, m=args.m, epsilon=eps)
    eta = maximally_mixed(target.n)
    if kind == "hypergraph":
        points = analysis.robustness_sweep(
            target, all_adaptive_forms(target), eta, eps_primes, params, args.runs, seed
        )
    elif kind == "hamiltonian":
        rh = rescale(target)
        projector = exact_diagonalize(target).projector
        points = analysis.robustness_sweep_ground(
            rh, projector, eta, eps_primes, params, args.runs, seed
        )
    else:
        decomps = all_stabilizer_decompositions(target)
        ideal = build_circuit_state(target)
        points = analysis.robustness_sweep_circuit(
            decomps, ideal, eta, eps_primes, params, args.runs, seed
        )
    out = {
        "command": "robustness",
        "target": str(args.target),
        "kind": kind,
        "seed": seed,
        "params": params.to_jsonable(),
        "points": [p.to_jsonable() for p in points],
    }
    _emit(out, args.out)
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    ok = run_selftest(seed=args.seed if args.seed is not None else 0)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pauliverify",
        description=(
            "Verify many-qubit states (hypergraph, circuit-generated, or "
            "Hamiltonian ground states) with single-qubit Pauli measurements."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-hypergraph", help="generate a random pair/triple hypergraph")
    p.add_argument("--n", type=int, required=True, help="number of vertices")
    p.add_argument("--edge-prob", type=float, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen_hypergraph)

    p = sub.add_parser("inspect", help="stabilizers, l1 norms, condition report")
    p.add_argument("target")
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("ppass", help="exact pass probability for a state/target pair")
    p.add_argument("--target", required=True)
    p.add_argument(
        "--state",
        default="ideal",
        help="ideal | maximally-mixed | deviated:EPS | phaseflip:QUBIT | pauli:AXES",
    )
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ppass)

    p = sub.add_parser("verify", help="run a verification protocol from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--mode", choices=("desk", "paper"), default=None,
                   help="override the config params mode")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--trials-csv", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("params", help="conforming parameter schedules")
    p.add_argument("--protocol", required=True, choices=("ground", "circuit", "hypergraph"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--l1", type=float, default=1.0, help="coefficient l1 norm")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("iqp-margin", help="sampling-hardness margin arithmetic")
    p.add_argument("--fidelity", type=float, default=None)
    p.add_argument("--report", default=None, help="a verify report supplying the fidelity")
    p.add_argument("--sampler-error", type=float, default=1 / 193)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_iqp_margin)

    p = sub.add_parser("robustness", help="acceptance sweep over deviated provers")
    p.add_argument("--target", required=True)
    p.add_argument("--eps-prime", required=True, help="comma-separated deviations")
    p.add_argument("--trials", "-k", type=int, required=True, help="tests per group")
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("selftest", help="run the built-in invariant battery")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapExceededError as exc:
        sys.stderr.write(
            reporting.canonical_json({"error": str(exc), "kind": "cap_exceeded"})
        )
        return 2
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(reporting.canonical_json({"error": str(exc), "kind": "config"}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
