import csv
import json

import pytest

from ldpnet.cli import main
from ldpnet.config import config_hash, normalize

DESK = {"model": {"n": 1, "T": 2}}


def run(tmp_path, command, cfg, *extra, out="out"):
    path = tmp_path / f"{command}.json"
    path.write_text(json.dumps(cfg))
    code = main([command, "--config", str(path), "--out", str(tmp_path / out), *extra])
    return code, tmp_path / out


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_simulate_minimal(tmp_path):
    code, out = run(tmp_path, "simulate", DESK)
    assert code == 0
    table = rows(out / "trajectories.csv")
    assert table[0] == ["replicate", "neuron", "u_0", "u_1", "u_2"]
    assert len(table) == 1 + 3
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seed"] == 0
    assert summary["version"].startswith("v")
    assert summary["config"]["model"]["gamma"] == 0.5
    assert summary["config_hash"] == config_hash(summary["config"])


def test_float_format_round_trips(tmp_path):
    _, out = run(tmp_path, "simulate", DESK)
    cell = rows(out / "trajectories.csv")[1][2]
    assert format(float(cell), ".17g") == cell


def test_invalid_gamma_exit_code(tmp_path, caplog):
    code, _ = run(tmp_path, "simulate", {"model": {"n": 1, "T": 2, "gamma": 1.2}})
    assert code == 2
    assert "gamma" in caplog.text


@pytest.mark.parametrize(
    "cfg",
    [
        {"model": {"n": 1, "T": 2, "gama": 0.3}},
        {"model": {"n": 1, "T": 2}, "kernal": {}},
        {"model": {"n": 1, "T": 2}, "rate": {"measure": {"kind": "empirical", "replicates": 2}}},
        {"model": {"T": 2}},
        {"model": {"n": 1, "T": 2}, "kernel": {"kind": "gaussian_blob"}},
    ],
)
def test_config_errors(tmp_path, cfg):
    assert run(tmp_path, "simulate", cfg)[0] == 2


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["rate", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_numeric_failure_exit_code(tmp_path):
    cfg = {**DESK, "kernel": {"kind": "table", "values": [[0, 0, 0], [1, 0, 1], [0, 0, 0]]}}
    assert run(tmp_path, "simulate", cfg)[0] == 3


def test_seed_override(tmp_path):
    _, a = run(tmp_path, "simulate", DESK, "--seed", "5", out="a")
    _, b = run(tmp_path, "simulate", DESK, "--seed", "6", out="b")
    assert json.loads((a / "summary.json").read_text())["seed"] == 5
    assert (a / "trajectories.csv").read_bytes() != (b / "trajectories.csv").read_bytes()


def test_simulate_repeatable(tmp_path):
    _, a = run(tmp_path, "simulate", DESK, out="a")
    _, b = run(tmp_path, "simulate", DESK, out="b")
    assert (a / "trajectories.csv").read_bytes() == (b / "trajectories.csv").read_bytes()


def test_rate_no_interaction(tmp_path):
    cfg = {"model": {"n": 1, "T": 2, "j_bar": 0.0}, "kernel": {"kind": "dirac", "j_var": 0.0}}
    code, out = run(tmp_path, "rate", cfg)
    assert code == 0
    report = json.loads((out / "gamma_report.json").read_text())
    assert report["gamma_n"] == 0.0


def test_rate_dirac_rows_constant(tmp_path):
    cfg = {"model": {"n": 2, "T": 2, "theta_std": 0.4}, "kernel": {"kind": "dirac", "j_var": 0.5}}
    _, out = run(tmp_path, "rate", cfg)
    table = rows(out / "spectrum.csv")
    body = [r[2:] for r in table[1:]]
    assert len(body) == 5
    assert all(r == body[0] for r in body)
    report = json.loads((out / "gamma_report.json").read_text())
    assert report["gamma_n"] == pytest.approx(report["gamma1_n"] + report["gamma2_n"], abs=1e-15)


def test_rate_on_gaussian_measure(tmp_path):
    cfg = {**DESK, "kernel": {"kind": "separable_geometric", "a": 0.3}, "rate": {"measure": {"kind": "gaussian"}}}
    code, out = run(tmp_path, "rate", cfg)
    assert code == 0
    assert json.loads((out / "gamma_report.json").read_text())["diagnostics"]["measure"] == "gaussian"


def test_rncheck_degenerate(tmp_path):
    cfg = {
        "model": {"n": 1, "T": 2, "j_bar": 0.0},
        "kernel": {"kind": "dirac", "j_var": 0.0},
        "rncheck": {"samples": 2000, "configurations": 2},
    }
    _, out = run(tmp_path, "rncheck", cfg)
    doc = json.loads((out / "rncheck.json").read_text())
    for case in doc["cases"]:
        assert case["mc_log_estimate"] == 0.0 and case["analytic_log_rn"] == 0.0
    assert doc["pushforward"]["lhs"] == doc["pushforward"]["rhs"]


def test_rncheck_reports_z(tmp_path):
    cfg = {**DESK, "kernel": {"kind": "dirac", "j_var": 0.25}, "rncheck": {"samples": 100000}}
    _, out = run(tmp_path, "rncheck", cfg)
    doc = json.loads((out / "rncheck.json").read_text())
    assert abs(doc["cases"][0]["z_score"]) < 3
    assert "z_score" in doc["pushforward"]


def test_entropy_reference_table(tmp_path):
    _, out = run(tmp_path, "entropy", DESK)
    table = rows(out / "entropy_table.csv")
    assert table[0] == ["n", "N", "entropy_rate"]
    assert all(abs(float(r[2])) < 1e-10 for r in table[1:])
    h = json.loads((out / "h_report.json").read_text())
    assert h["H"] == pytest.approx(h["I3"] - h["gamma1"] - h["gamma2"], abs=1e-15)


def test_entropy_schedule_length(tmp_path):
    _, a = run(tmp_path, "entropy", {**DESK, "entropy": {"schedule": [2, 4]}}, out="a")
    _, b = run(tmp_path, "entropy", {**DESK, "entropy": {"schedule": [2, 4, 8]}}, out="b")
    assert len(rows(b / "entropy_table.csv")) > len(rows(a / "entropy_table.csv"))


def test_converge_dirac_exact(tmp_path):
    cfg = {**DESK, "kernel": {"kind": "dirac", "j_var": 0.5}}
    _, out = run(tmp_path, "converge", cfg)
    table = rows(out / "converge.csv")
    assert table[0] == ["n", "gamma1_n", "gamma1_lim", "abs_err1", "gamma2_n", "gamma2_lim", "abs_err2"]
    for r in table[1:]:
        assert float(r[3]) <= 1e-10 and float(r[6]) <= 1e-10


def test_converge_separable_trend(tmp_path):
    cfg = {
        "model": {"n": 1, "T": 2, "theta_std": 0.3},
        "kernel": {"kind": "separable_geometric", "a": 0.5, "rho1": 0.5, "rho2": 0.4},
        "converge": {"measure": {"kind": "gaussian", "neuron_taps": [1.0, 0.3, 0.2], "time_corr": 0.3}},
    }
    _, out = run(tmp_path, "converge", cfg)
    table = rows(out / "converge.csv")[1:]
    for col in (3, 6):
        errs = [float(r[col]) for r in table]
        assert all(b <= a for a, b in zip(errs[1:], errs[2:]))


def test_sample_weights_summary(tmp_path):
    cfg = {**DESK, "sample_weights": {"samples": 200}}
    _, out = run(tmp_path, "sample-weights", cfg)
    assert len(rows(out / "weights.csv")) == 201
    doc = json.loads((out / "weights_summary.json").read_text())
    assert doc["target_mean"] == pytest.approx(1 / 3)


def test_normalize_fills_defaults():
    cfg = normalize({"model": {"n": 2, "T": 3}})
    assert cfg["kernel"] == {"kind": "dirac", "j_var": 1.0}
    assert cfg["rate"]["measure"]["source"] == "network"
    assert cfg["seed"] == 0
