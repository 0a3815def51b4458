import json
import math

import pytest

from mamsap.cli import main

THETA = math.log(1.5)


def _config(tmp_path, **over):
    raw = {
        "layout": {"arms": 3, "stages": 2, "group_size": 10},
        "targets": {"alpha": 0.10, "beta": 0.20, "theta_prime": 0.8},
        "boundary": {"family": "double_triangular", "binding": True},
        "execution": {"precision": 3e-4, "seed": 11},
    }
    for key, val in over.items():
        raw[key] = val
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return path


@pytest.fixture(scope="module")
def designed(tmp_path_factory):
    """Run cmd_design once for the cheap 3-arm layout and share the output."""
    tmp = tmp_path_factory.mktemp("design_run")
    cfg = _config(tmp)
    out = tmp / "out"
    assert main(["design", "--config", str(cfg), "--out", str(out)]) == 0
    return cfg, out


def test_design_outputs(designed):
    cfg, out = designed
    payload = json.loads((out / "design.json").read_text())
    assert payload["design"]["arms"] == 3
    assert payload["design"]["binding"] is True
    assert len(payload["design"]["outer"]) == 2
    assert payload["report"]["fwer"]["value"] == pytest.approx(0.10, abs=0.004)
    assert (out / "design.txt").read_text().startswith("design")


def test_design_deterministic(designed, tmp_path):
    cfg, out = designed
    out2 = tmp_path / "again"
    assert main(["design", "--config", str(cfg), "--out", str(out2)]) == 0
    assert (out / "design.json").read_bytes() == (out2 / "design.json").read_bytes()


def test_seed_override_changes_output(designed, tmp_path):
    cfg, out = designed
    out2 = tmp_path / "reseeded"
    assert main(
        ["design", "--config", str(cfg), "--seed", "99", "--out", str(out2)]
    ) == 0
    a = json.loads((out / "design.json").read_text())
    b = json.loads((out2 / "design.json").read_text())
    assert a["report"]["fwer"]["value"] != b["report"]["fwer"]["value"]
    # but the designs agree to solver tolerance
    assert a["design"]["outer"][0] == pytest.approx(b["design"]["outer"][0], abs=0.01)


def test_evaluate_roundtrip(designed, tmp_path):
    cfg, out = designed
    out2 = tmp_path / "eval"
    code = main(
        [
            "evaluate",
            "--config", str(cfg),
            "--design", str(out / "design.json"),
            "--out", str(out2),
        ]
    )
    assert code == 0
    payload = json.loads((out2 / "evaluation.json").read_text())
    designed_fwer = json.loads((out / "design.json").read_text())["report"]["fwer"]
    assert payload["report"]["fwer"]["value"] == pytest.approx(
        designed_fwer["value"], abs=6 * 3e-4
    )
    assert "breakdown" in payload["report"]


def test_simulate_agreement(designed, tmp_path):
    cfg, out = designed
    out2 = tmp_path / "sim"
    code = main(
        [
            "simulate",
            "--config", str(cfg),
            "--design", str(out / "design.json"),
            "--reps", "200000",
            "--out", str(out2),
        ]
    )
    assert code == 0
    payload = json.loads((out2 / "simulation.json").read_text())
    for name, row in payload["agreement"].items():
        assert abs(row["z"]) < 4, f"{name}: z={row['z']}"


def test_strong_check(designed, tmp_path):
    cfg, out = designed
    out2 = tmp_path / "cert"
    code = main(
        [
            "strong-check",
            "--config", str(cfg),
            "--design", str(out / "design.json"),
            "--out", str(out2),
        ]
    )
    payload = json.loads((out2 / "strong_check.json").read_text())
    assert payload["verdict"] in ("PASS", "INCONCLUSIVE")
    assert code == (0 if payload["verdict"] == "PASS" else 3)


def test_plot_data(designed, tmp_path):
    cfg, out = designed
    out2 = tmp_path / "plot"
    code = main(
        ["plot-data", "--design", str(out / "design.json"), "--out", str(out2)]
    )
    assert code == 0
    lines = (out2 / "boundaries.csv").read_text().strip().splitlines()
    assert lines[0] == "stage,information_fraction,u,minus_u,u_star,minus_u_star"
    assert len(lines) == 3
    stage1 = lines[1].split(",")
    assert float(stage1[2]) == -float(stage1[3])


def test_compare_sequential_rows(tmp_path):
    cfg = _config(
        tmp_path,
        comparators=["separate_trials", "sequential_separate"],
    )
    out = tmp_path / "cmp"
    assert main(["compare", "--config", str(cfg), "--out", str(out)]) == 0
    rows = json.loads((out / "comparison.json").read_text())
    assert "separate_trials" in rows and "sequential_separate" in rows
    assert rows["separate_trials"]["fwer"]["value"] == pytest.approx(
        1 - 0.9**3
    )
    assert rows["sequential_separate"]["fwer"]["value"] == pytest.approx(
        1 - 0.9**2
    )
    txt = (out / "comparison.txt").read_text()
    assert "mamsap (binding)" in txt


def test_config_error_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"layout": {"arms": 3, "stages": 2}, "targets": {"beta": 2}}))
    assert main(["design", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["design", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    assert main(["evaluate", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["plot-data", "--out", str(tmp_path)]) == 2
