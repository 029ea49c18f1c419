import json
from pathlib import Path

import pytest

from qpathlab.cli import ScenarioConfig, load_config, main

FREE_SMALL = """
scenario = "free_gaussian"

[grid]
x_min = -16.0
x_max = 16.0
n = 256

[physics]
sigma0 = 1.0

[evolution]
dt = 1e-3
n_steps = 200
store_every = 10
residual_dt = 2e-3
residual_steps = 50

[trajectories]
n_quantiles = 50
"""

TWO_SLIT_SMALL = """
scenario = "two_slit"

[grid]
x_min = -24.0
x_max = 24.0
n = 512

[physics]
slit_separation = 3.0
slit_width = 0.4

[evolution]
dt = 2e-3
n_steps = 600
store_every = 3

[trajectories]
n_seeds = 100
"""

NELSON_SMALL = """
scenario = "nelson_convergence"

[grid]
x_min = -16.0
x_max = 16.0
n = 256

[physics]
sigma0 = 1.0
omega = 1.0

[evolution]
dt = 1e-3
n_steps = 200

[stochastic]
n_paths = 2000
master_seed = 5
store_every = 5
bandwidth = 0.4
ladder = [1000, 2000]
n_probes = 5
seed_positions = [-0.4, 0.4]
"""


def write(tmp_path, text, name="config.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_tree(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def test_validate_passes_clean_config(tmp_path, capsys):
    cfg = write(tmp_path, FREE_SMALL)
    assert main(["validate", cfg]) == 0
    assert capsys.readouterr().out == ""


def test_validate_reports_missing_dt(tmp_path, capsys):
    cfg = write(tmp_path, FREE_SMALL.replace("dt = 1e-3\n", ""))
    assert main(["validate", cfg]) == 2
    assert "evolution.dt" in capsys.readouterr().out


def test_validate_reports_bad_sigma(tmp_path, capsys):
    cfg = write(tmp_path, FREE_SMALL.replace("sigma0 = 1.0", "sigma0 = -2.0"))
    assert main(["validate", cfg]) == 2
    out = capsys.readouterr().out
    assert "physics.sigma0" in out and "positive" in out


def test_validate_reports_unknown_scenario(tmp_path, capsys):
    cfg = write(tmp_path, FREE_SMALL.replace('"free_gaussian"', '"warp_drive"'))
    assert main(["validate", cfg]) == 2
    assert "scenario" in capsys.readouterr().out


def test_validate_lists_all_violations():
    cfg = ScenarioConfig.from_dict({"scenario": "free_gaussian"})
    problems = cfg.validate()
    assert len(problems) >= 3  # grid fields plus evolution fields


def test_missing_config_file():
    assert main(["run", "/nonexistent/nope.toml"]) == 2


def test_malformed_config(tmp_path):
    cfg = write(tmp_path, "scenario = [unclosed")
    assert main(["validate", cfg]) == 2


def test_run_refuses_invalid_config(tmp_path):
    cfg = write(tmp_path, FREE_SMALL.replace("dt = 1e-3\n", ""))
    assert main(["run", cfg]) == 2


# ---------------------------------------------------------------------------
# running scenarios
# ---------------------------------------------------------------------------

def test_free_gaussian_run_and_outputs(tmp_path):
    cfg = write(tmp_path, FREE_SMALL)
    out = tmp_path / "out"
    assert main(["run", cfg, "--output-dir", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["scenario"] == "free_gaussian"
    assert report["all_passed"] is True
    names = {c["name"] for c in report["checks"]}
    assert "continuity_dt_ratio" in names and "equivariance_w1" in names
    for c in report["checks"]:
        assert "tolerance" in c and "oracle" in c
    header = (out / "trajectories.csv").read_text().splitlines()[0]
    assert header == "scenario,traj_id,t,x"
    header = (out / "density.csv").read_text().splitlines()[0]
    assert header == "t,x,value"


def test_free_gaussian_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path, FREE_SMALL)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", cfg, "--output-dir", str(out1)]) == 0
    assert main(["run", cfg, "--output-dir", str(out2)]) == 0
    assert read_tree(out1) == read_tree(out2)


def test_two_slit_run(tmp_path):
    cfg = write(tmp_path, TWO_SLIT_SMALL)
    out = tmp_path / "out"
    assert main(["run", cfg, "--output-dir", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    by_name = {c["name"]: c for c in report["checks"]}
    assert by_name["no_axis_crossing"]["passed"] is True
    rows = (out / "trajectories.csv").read_text().splitlines()[1:]
    ids = {int(r.split(",")[1]) for r in rows}
    assert ids == set(range(100))


def test_nelson_seed_override_changes_outputs(tmp_path):
    cfg = write(tmp_path, NELSON_SMALL)
    out1, out2, out3 = (tmp_path / d for d in ("a", "b", "c"))
    main(["run", cfg, "--output-dir", str(out1)])
    main(["run", cfg, "--output-dir", str(out2), "--seed-override", "99"])
    main(["run", cfg, "--output-dir", str(out3)])
    t1, t2, t3 = read_tree(out1), read_tree(out2), read_tree(out3)
    assert t1["ensemble_summary.csv"] != t2["ensemble_summary.csv"]
    assert t1 == t3


def test_threads_flag_does_not_change_outputs(tmp_path):
    cfg = write(tmp_path, NELSON_SMALL)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["run", cfg, "--output-dir", str(out1)])
    main(["run", cfg, "--output-dir", str(out2), "--threads", "4"])
    assert read_tree(out1) == read_tree(out2)


def test_thread_count_env_default(tmp_path, monkeypatch):
    cfg = write(tmp_path, NELSON_SMALL)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    monkeypatch.setenv("QPATHLAB_THREADS", "3")
    assert main(["run", cfg, "--output-dir", str(out1)]) in (0, 1)
    monkeypatch.setenv("QPATHLAB_THREADS", "not-a-number")
    assert main(["run", cfg, "--output-dir", str(out2)]) == 2


def test_rejects_nonpositive_threads(tmp_path):
    cfg = write(tmp_path, NELSON_SMALL)
    assert main(["run", cfg, "--threads", "0"]) == 2


def test_module_error_is_recorded(tmp_path):
    # kernel scenario with an impossible internal grid: error goes to the
    # report and the exit code is 1
    text = """
scenario = "kernel_convergence"

[grid]
x_min = -10.0
x_max = 10.0
n = 64

[kernel]
n_slices = 2
t_total = 0.5
free_n = 100
"""
    cfg = write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["run", cfg, "--output-dir", str(out)]) == 1
    report = json.loads((out / "report.json").read_text())
    assert "error" in report and report["all_passed"] is False


def test_load_config_roundtrip(tmp_path):
    cfg = load_config(write(tmp_path, FREE_SMALL))
    assert cfg.scenario == "free_gaussian"
    assert cfg.validate() == []
    assert cfg.make_grid().n == 256


def test_bad_cli_usage_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
