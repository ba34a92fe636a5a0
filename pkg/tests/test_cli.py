import json

import pytest

from qcfield import load_model, save_model
from qcfield.cli import (EXIT_ASSERTION, EXIT_OK, EXIT_VALIDATION, ConfigError,
                         main, parse_run_config, render_json)
from qcfield.presets import cosine_coupled_reference, decoupled_reference


@pytest.fixture(scope="module")
def model_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("models")
    save_model(decoupled_reference(), d / "decoupled.json")
    save_model(cosine_coupled_reference(), d / "cosine.json")
    return d


def _write_cfg(path, text):
    path.write_text(text)
    return path


def test_config_parsing(tmp_path, model_dir):
    cfg_path = _write_cfg(tmp_path / "run.cfg", f"""
# comment line
command = qc-min
model = {model_dir / 'decoupled.json'}
seed = 9
eps_list = 0.5, 0.25
tol_gap = 1e-7
""")
    cfg = parse_run_config(cfg_path)
    assert cfg["command"] == "qc-min"
    assert cfg["seed"] == 9
    assert cfg["eps_list"] == [0.5, 0.25]
    assert cfg["tol_gap"] == 1e-7


def test_config_rejects_bad_inputs(tmp_path, model_dir):
    bad = _write_cfg(tmp_path / "a.cfg", "command = nope\nmodel = x.json\n")
    with pytest.raises(ConfigError):
        parse_run_config(bad)
    missing = _write_cfg(tmp_path / "b.cfg",
                         "command = qc-min\nmodel = missing.json\n")
    with pytest.raises(ConfigError):
        parse_run_config(missing)
    increasing = _write_cfg(
        tmp_path / "c.cfg",
        f"command = qc-min\nmodel = {model_dir / 'decoupled.json'}\n"
        "eps_list = 0.25, 0.5\n")
    with pytest.raises(ConfigError):
        parse_run_config(increasing)


def test_model_round_trip_via_cli_paths(model_dir):
    spec = load_model(model_dir / "decoupled.json")
    assert spec.family == "nelson"
    assert spec.grid.points_per_axis == 64


def test_qc_min_run_and_artifacts(tmp_path, model_dir):
    cfg = _write_cfg(tmp_path / "run.cfg", f"""
command = qc-min
model = {model_dir / 'cosine.json'}
""")
    out = tmp_path / "out"
    code = main(["qc-min", "--config", str(cfg), "--out", str(out)])
    assert code == EXIT_OK
    results = json.loads((out / "results.json").read_text())
    assert results["converged"] is True
    assert results["psi_residual"] <= 1e-7
    trace = (out / "trace.csv").read_text().splitlines()
    assert trace[0] == "iteration,energy,psi_residual,field_residual"
    energies = [float(line.split(",")[1]) for line in trace[1:]]
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
    # every number in results.json reproducible from the library
    from qcfield import alternating_minimize
    res = alternating_minimize(load_model(model_dir / "cosine.json"))
    assert results["energy"] == res.energy


def test_equivalence_exit_codes(tmp_path, model_dir):
    cfg = _write_cfg(tmp_path / "eq.cfg", f"""
command = equivalence
model = {model_dir / 'decoupled.json'}
n_starts = 2
""")
    out = tmp_path / "eq_out"
    assert main(["equivalence", "--config", str(cfg),
                 "--out", str(out)]) == EXIT_OK
    results = json.loads((out / "results.json").read_text())
    assert results["gap"] <= 1e-8
    # impossible tolerance trips the assertion exit
    cfg_tight = _write_cfg(tmp_path / "eq2.cfg", f"""
command = equivalence
model = {model_dir / 'cosine.json'}
tol_gap = 1e-300
""")
    assert main(["equivalence", "--config", str(cfg_tight),
                 "--out", str(tmp_path / "eq2_out")]) == EXIT_ASSERTION


def test_fock_sweep_artifacts_and_flagging(tmp_path, model_dir):
    cfg = _write_cfg(tmp_path / "sw.cfg", f"""
command = fock-sweep
model = {model_dir / 'decoupled.json'}
eps_list = 0.5, 0.25
""")
    out = tmp_path / "sw_out"
    assert main(["fock-sweep", "--config", str(cfg),
                 "--out", str(out)]) == EXIT_OK
    header = (out / "sweep.csv").read_text().splitlines()[0]
    assert header == "epsilon,E_eps,E_qc,abs_err,n_max,tail_mass"
    plot = (out / "sweep.plot").read_text().splitlines()
    assert len(plot) == 2 and len(plot[0].split()) == 2
    # a too-small pinned cutoff flags rows and exits 4
    cfg_small = _write_cfg(tmp_path / "sw2.cfg", f"""
command = fock-sweep
model = {model_dir / 'decoupled.json'}
eps_list = 0.5, 0.25
n_max = 2
""")
    assert main(["fock-sweep", "--config", str(cfg_small),
                 "--out", str(tmp_path / "sw2_out")]) == EXIT_ASSERTION


def test_command_mismatch_rejected(tmp_path, model_dir):
    cfg = _write_cfg(tmp_path / "mm.cfg", f"""
command = qc-min
model = {model_dir / 'decoupled.json'}
""")
    assert main(["pekar", "--config", str(cfg),
                 "--out", str(tmp_path / "mm_out")]) == EXIT_VALIDATION


def test_render_json_deterministic():
    payload = {"a": 1.0 / 3.0, "b": [1, 2.5e-17], "c": None, "d": True,
               "e": "quote\"d"}
    one = render_json(payload)
    two = render_json(payload)
    assert one == two
    parsed = json.loads(one)
    assert parsed["a"] == 1.0 / 3.0  # 17 significant digits round-trip
    assert parsed["b"][1] == 2.5e-17


def test_repeated_runs_byte_identical(tmp_path, model_dir):
    cfg = _write_cfg(tmp_path / "det.cfg", f"""
command = qc-min
model = {model_dir / 'cosine.json'}
n_starts = 2
""")
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert main(["qc-min", "--config", str(cfg), "--out", str(out),
                     "--seed", "11"]) == EXIT_OK
        outs.append((out / "results.json").read_bytes())
    assert outs[0] == outs[1]
