import json
from pathlib import Path

import pytest

from pauliverify.cli import build_parser, main

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"

SUBCOMMANDS = [
    "gen-hypergraph",
    "inspect",
    "ppass",
    "verify",
    "params",
    "iqp-margin",
    "robustness",
    "selftest",
]


@pytest.mark.parametrize("name", SUBCOMMANDS)
def test_help_contract(name, capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args([name, "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert name in out or "usage" in out


def run_cli(args, capsys) -> tuple[int, str, str]:
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_params_golden(capsys):
    code, out, _ = run_cli(["params", "--protocol", "hypergraph", "--n", "2"], capsys)
    assert code == 0
    assert out == (GOLDEN / "params_hypergraph_n2.json").read_text()


def test_gen_hypergraph_golden(capsys):
    code, out, _ = run_cli(
        ["gen-hypergraph", "--n", "4", "--edge-prob", "0.5", "--seed", "11"], capsys
    )
    assert code == 0
    assert out == (GOLDEN / "gen_hypergraph_n4_seed11.json").read_text()


def test_gen_hypergraph_writes_loadable_file(tmp_path, capsys):
    out_file = tmp_path / "g.json"
    code, out, _ = run_cli(
        [
            "gen-hypergraph", "--n", "5", "--edge-prob", "0.4",
            "--seed", "3", "--out", str(out_file),
        ],
        capsys,
    )
    assert code == 0
    manifest = json.loads(out)
    assert manifest["seed"] == 3
    from pauliverify.hypergraphs import load_hypergraph

    g, z = load_hypergraph(out_file)
    assert g.n == 5 and manifest["n_edges"] == len(g.edges)


def test_inspect_golden(capsys):
    code, out, _ = run_cli(["inspect", str(DATA / "triple.json")], capsys)
    assert code == 0
    got = json.loads(out)
    want = json.loads((GOLDEN / "inspect_triple.json").read_text())
    want["target"] = got["target"]  # path differs by invocation dir only
    assert got == want


def test_ppass_golden(capsys):
    code, out, _ = run_cli(
        ["ppass", "--target", str(DATA / "triple.json"), "--state", "ideal"], capsys
    )
    assert code == 0
    got = json.loads(out)
    want = json.loads((GOLDEN / "ppass_triple_ideal.json").read_text())
    want["target"] = got["target"]
    assert got == want


def test_verify_golden_and_determinism(tmp_path, capsys):
    config = DATA / "verify_hyper_honest.json"
    code, out1, _ = run_cli(["verify", "--config", str(config)], capsys)
    assert code == 0
    assert out1 == (GOLDEN / "verify_hyper_honest.json").read_text()
    code, out2, _ = run_cli(["verify", "--config", str(config)], capsys)
    assert out1 == out2
    # a different seed changes the bytes
    code, out3, _ = run_cli(["verify", "--config", str(config), "--seed", "1"], capsys)
    assert out3 != out1


def test_verify_trials_csv(tmp_path, capsys):
    csv_path = tmp_path / "trials.csv"
    code, out, _ = run_cli(
        [
            "verify", "--config", str(DATA / "verify_hyper_honest.json"),
            "--trials-csv", str(csv_path),
        ],
        capsys,
    )
    assert code == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "run,group,trial,register,branch,passed"
    assert len(lines) == 1 + 3 * 40  # n groups * k trials
    assert all(line.endswith(",1") for line in lines[1:])  # honest passes all


def test_verify_multi_run_summary(capsys):
    code, out, _ = run_cli(
        ["verify", "--config", str(DATA / "verify_hyper_honest.json"), "--runs", "3"],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["runs"] == 3
    assert doc["accepted_runs"] == 3
    assert len(doc["reports"]) == 3


def test_verify_protocol_mismatch_is_config_error(tmp_path, capsys):
    bad = {
        "protocol": "ground",
        "target": str((DATA / "triple.json").resolve()),
        "params": {"mode": "desk", "k": 5},
        "seed": 1,
    }
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps(bad))
    code, out, err = run_cli(["verify", "--config", str(cfg)], capsys)
    assert code == 1
    assert json.loads(err)["kind"] == "config"


def test_verify_paper_mode_small_ground(tmp_path, capsys):
    cfg = {
        "protocol": "ground",
        "target": str((DATA / "minus_z.json").resolve()),
        "params": {"mode": "paper"},
        "prover": {"kind": "honest"},
        "seed": 9,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run_cli(["verify", "--config", str(path)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["report"]["params"]["mode"] == "paper"
    assert doc["report"]["params"]["conforming"] is True
    assert doc["report"]["accepted"] is True  # honest ground at n=1


def test_verify_paper_mode_refuses_astronomical(tmp_path, capsys):
    cfg = {
        "protocol": "hypergraph",
        "target": str((DATA / "triple.json").resolve()),
        "params": {"mode": "paper"},
        "seed": 9,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, _, err = run_cli(["verify", "--config", str(path)], capsys)
    assert code == 1
    assert "report-only" in json.loads(err)["error"]


def test_iqp_margin_golden_and_report_input(tmp_path, capsys):
    code, out, _ = run_cli(["iqp-margin", "--fidelity", "0.9999"], capsys)
    assert code == 0
    assert out == (GOLDEN / "iqp_margin.json").read_text()
    code, out, _ = run_cli(
        ["iqp-margin", "--report", str(GOLDEN / "verify_hyper_honest.json")], capsys
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["margin"]["fidelity"] == pytest.approx(1.0)
    code, _, err = run_cli(["iqp-margin"], capsys)
    assert code == 1


def test_robustness_golden(capsys):
    code, out, _ = run_cli(
        [
            "robustness", "--target", str(DATA / "triple.json"),
            "--eps-prime", "0,0.05", "-k", "30", "--runs", "10", "--seed", "7",
        ],
        capsys,
    )
    assert code == 0
    got = json.loads(out)
    want = json.loads((GOLDEN / "robustness_triple.json").read_text())
    want["target"] = got["target"]
    assert got == want


def test_robustness_other_kinds_are_labeled_extrapolated(capsys):
    code, out, _ = run_cli(
        [
            "robustness", "--target", str(DATA / "minus_z.json"),
            "--eps-prime", "0.0,0.3", "-k", "20", "--runs", "6", "--seed", "2",
        ],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    assert all(p["bound"]["label"] == "extrapolated" for p in doc["points"])


def test_selftest_golden(capsys):
    code, out, _ = run_cli(["selftest"], capsys)
    assert code == 0
    assert out == (GOLDEN / "selftest.txt").read_text()


def test_error_paths(capsys, tmp_path):
    code, _, err = run_cli(["inspect", str(tmp_path / "missing.json")], capsys)
    assert code == 1
    assert json.loads(err)["kind"] == "config"
    # cap exceeded surfaces as exit 2
    big = {"n_vertices": 20, "edges": [[0, 1]]}
    path = tmp_path / "big.json"
    path.write_text(json.dumps(big))
    code, _, err = run_cli(
        ["ppass", "--target", str(path), "--state", "ideal"], capsys
    )
    assert code == 2
    assert json.loads(err)["kind"] == "cap_exceeded"