import json
import os

import numpy as np
import pytest

from delayline import cli


def scenario_bench(outdir, **over):
    scn = {
        "name": "bench-small",
        "operator": {"id": "delay_linear",
                     "params": {"a": -1.0, "b": 0.5, "r": np.pi,
                                "h": "cos", "omega": -1.0}},
        "start": {"kind": "zero"},
        "grid": {"t_min": -15.0, "t_max": 15.0, "dt": 0.02},
        "solver": {"lambda_schedule": [0.2, 0.1], "tol_outer": 1e-4,
                   "burn_in": 5.0},
        "checks": [{"kind": "periodicity", "T": 2 * np.pi},
                   {"kind": "lipschitz"}],
        "output_dir": str(outdir),
    }
    scn.update(over)
    return scn


def write_scn(tmp_path, scn, name="scn.json"):
    p = tmp_path / name
    p.write_text(json.dumps(scn))
    return str(p)


def run(args):
    return cli.main(args)


def test_solve_benchmark_exit_zero_and_outputs(tmp_path):
    out = tmp_path / "out"
    path = write_scn(tmp_path, scenario_bench(out))
    assert run(["solve", path]) == 0
    for name in ("trajectory.csv", "convergence.json", "qualitative.json",
                 "manifest.json"):
        assert (out / name).exists(), name
    man = json.loads((out / "manifest.json").read_text())
    assert "config_sha256" in man and "versions" in man
    head = (out / "trajectory.csv").read_text().splitlines()[0]
    assert head == "t,x1"


def test_solve_is_byte_identical_across_runs_and_threads(tmp_path):
    o1, o2 = tmp_path / "a", tmp_path / "b"
    p1 = write_scn(tmp_path, scenario_bench(o1), "a.json")
    p2 = write_scn(tmp_path, scenario_bench(o2), "b.json")
    assert run(["solve", p1, "--threads", "1"]) == 0
    assert run(["solve", p2, "--threads", "4"]) == 0
    assert (o1 / "trajectory.csv").read_bytes() == (o2 / "trajectory.csv").read_bytes()


def test_gate_refusal_exit_3(tmp_path):
    scn = scenario_bench(tmp_path / "out")
    scn["operator"]["params"]["b"] = 2.0  # K0 = 2 >= -omega = 1
    assert run(["solve", write_scn(tmp_path, scn)]) == 3
    assert not (tmp_path / "out" / "trajectory.csv").exists()


def test_gate_refusal_exit_3_for_Lg(tmp_path):
    scn = scenario_bench(tmp_path / "out")
    scn["operator"] = {"id": "affine_forced",
                       "params": {"a": -1.0, "h": "cos", "Lg": 2.0,
                                  "omega": -1.0}}
    assert run(["solve", write_scn(tmp_path, scn)]) == 3


def test_malformed_config_exit_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"nam": "x"}')
    assert run(["solve", str(p)]) == 2
    p.write_text("{not json")
    assert run(["solve", str(p)]) == 2
    scn = scenario_bench(tmp_path / "out")
    scn["checks"] = [{"kind": "periodicity", "T": 1.0, "typo": 1}]
    assert run(["solve", write_scn(tmp_path, scn)]) == 2


def test_nonconvergence_exit_4(tmp_path):
    scn = scenario_bench(tmp_path / "out")
    scn["solver"] = {"lambda_schedule": [0.2, 0.1], "tol_outer": 1e-13,
                     "n_max": 1, "burn_in": 5.0}
    assert run(["solve", write_scn(tmp_path, scn)]) == 4
    assert (tmp_path / "out" / "failure.json").exists()


def test_out_flag_and_env_override(tmp_path, monkeypatch):
    scn = scenario_bench(tmp_path / "ignored")
    path = write_scn(tmp_path, scn)
    flagged = tmp_path / "flagged"
    assert run(["solve", path, "--out", str(flagged)]) == 0
    assert (flagged / "trajectory.csv").exists()
    env_dir = tmp_path / "from_env"
    monkeypatch.setenv(cli.OUT_ENV, str(env_dir))
    assert run(["solve", path, "--out", str(flagged)]) == 0
    assert (env_dir / "trajectory.csv").exists()


def test_config_round_trips(tmp_path):
    scn = scenario_bench(tmp_path / "out")
    path = write_scn(tmp_path, scn)
    loaded = cli.load_scenario(path)
    again = json.loads(json.dumps(loaded))
    assert again == loaded


def test_verify_passes_catalog_and_flags_expansive(tmp_path):
    scn = scenario_bench(tmp_path / "v1")
    scn["verify"] = {"n_samples": 1000, "seed": 3}
    assert run(["verify", write_scn(tmp_path, scn, "v1.json")]) == 0
    rep = json.loads((tmp_path / "v1" / "assumptions.json").read_text())
    assert rep["passed"] and not rep["vacuous"]

    bad = scenario_bench(tmp_path / "v2")
    bad["operator"] = {"id": "expansive_control", "params": {}}
    bad["verify"] = {"n_samples": 1000, "seed": 3}
    assert run(["verify", write_scn(tmp_path, bad, "v2.json")]) == 1
    rep = json.loads((tmp_path / "v2" / "assumptions.json").read_text())
    assert rep["dissipativity"]["n_violations"] >= 1


def test_verify_zero_samples_vacuous(tmp_path):
    scn = scenario_bench(tmp_path / "v0")
    scn["verify"] = {"n_samples": 0}
    assert run(["verify", write_scn(tmp_path, scn)]) == 0
    rep = json.loads((tmp_path / "v0" / "assumptions.json").read_text())
    assert rep["vacuous"]


def oracle_scn(outdir, **over):
    scn = {
        "name": "oracle",
        "grid": {"t_min": -10.0, "t_max": 10.0, "dt": 0.01},
        "oracle": {"alpha": 1.0, "beta": 2.0, "forcing": "one",
                   "n_random": 2, "tol": 1e-5},
        "output_dir": str(outdir),
    }
    scn.update(over)
    return scn


def test_oracle_constant_forcing(tmp_path, capsys):
    out = tmp_path / "out"
    assert run(["oracle", write_scn(tmp_path, oracle_scn(out))]) == 0
    assert "u(mid) = 2" in capsys.readouterr().out
    rep = json.loads((out / "oracle.json").read_text())
    assert rep["passed"]
    assert rep["cases"][0]["positivity_violations"] == 0


def test_oracle_alpha_ge_beta_exit_2(tmp_path):
    scn = oracle_scn(tmp_path / "out")
    scn["oracle"]["alpha"] = 3.0
    assert run(["oracle", write_scn(tmp_path, scn)]) == 2
