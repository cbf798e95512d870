import json
import os

import numpy as np
import pytest

from tlsph.cases import (
    CASE_DESCRIPTIONS,
    build_simulation,
    case_ids,
    config_to_params,
    default_parameters,
    make_config,
)
from tlsph.cli import main
from tlsph.errors import ConfigurationError
from tlsph.geometry import tube_mesh, write_stl_file


# -- case registry ------------------------------------------------------------

def test_case_registry_lists_all_presets():
    assert case_ids() == ["cable", "bending", "twisting", "stl"]
    assert set(CASE_DESCRIPTIONS) == set(case_ids())


def test_presets_pin_benchmark_materials():
    cable = make_config(default_parameters("cable"))
    assert (cable.material.rho0, cable.material.E, cable.material.nu) == (8000.0, 200e9, 0.0)
    assert cable.material.law == "linear"
    assert cable.cfl == 0.6
    assert cable.material.alpha == 0.5

    bending = make_config(default_parameters("bending"))
    assert (bending.material.rho0, bending.material.E, bending.material.nu) == (1100.0, 1.7e7, 0.45)
    assert bending.material.law == "neo-hookean"

    twisting = make_config(default_parameters("twisting"))
    assert twisting.material.nu == 0.4995
    assert twisting.omega0 == 105.0

    fast = default_parameters("twisting")
    fast["omega0"] = 300.0
    assert make_config(fast).material.nu == 0.49995
    explicit = default_parameters("twisting")
    explicit.update(omega0=300.0, nu=0.4995)
    assert make_config(explicit).material.nu == 0.4995


def test_make_config_rejects_unknown_keys_and_cases():
    with pytest.raises(ConfigurationError, match="unknown configuration key"):
        make_config({"case": "cable", "dq": 0.1})
    with pytest.raises(ConfigurationError, match="unknown case"):
        make_config({"case": "rope"})
    params = default_parameters("stl")
    with pytest.raises(ConfigurationError, match="stl"):
        make_config(params)  # stl case without a mesh path


def test_twisting_probe_sits_on_the_axis():
    params = default_parameters("twisting")
    params.update(dp=0.25, t_end=0.0)
    sim = build_simulation(make_config(params))
    # column is centered on the rotation axis; free end at y = 6
    lo = sim.system.r0.min(axis=0)
    hi = sim.system.r0.max(axis=0)
    assert lo[0] == pytest.approx(-hi[0], rel=1e-12)
    assert lo[2] == pytest.approx(-hi[2], rel=1e-12)
    assert hi[1] == pytest.approx(6.0 - 0.125, rel=1e-12)


# -- CLI ------------------------------------------------------------------------

def test_cli_list_cases(capsys):
    assert main(["list-cases"]) == 0
    out = capsys.readouterr().out
    for case in case_ids():
        assert case in out


def test_cli_rejects_bad_parameters():
    assert main(["run", "cable", "--dp", "-1"]) == 2
    assert main(["run", "nosuchcase"]) == 2
    assert main(["run", "cable", "--cfl", "1.5"]) == 2
    assert main(["run", "stl", "--stl", "/does/not/exist.stl"]) == 2


def test_cli_cable_run_produces_outputs(tmp_path):
    out = tmp_path / "runs"
    code = main(["run", "cable", "--dp", "0.1", "--t-end", "2e-4",
                 "--out", str(out)])
    assert code == 0
    case_dir = out / "cable"
    for name in ("manifest.json", "tip_velocity.csv", "tip_displacement.csv",
                 "conservation.csv", "snapshot_0.vtk"):
        assert (case_dir / name).exists(), name
    manifest = json.loads((case_dir / "manifest.json").read_text())
    assert manifest["alpha"] == 0.5
    assert manifest["cfl"] == 0.6
    assert manifest["dp"] == 0.1
    assert manifest["h"] == pytest.approx(1.15 * 0.1, rel=1e-15)


def test_cli_no_damping_recorded_as_alpha_zero(tmp_path):
    out = tmp_path / "runs"
    code = main(["run", "cable", "--dp", "0.1", "--t-end", "0",
                 "--no-damping", "--out", str(out)])
    assert code == 0
    manifest = json.loads((out / "cable" / "manifest.json").read_text())
    assert manifest["alpha"] == 0.0


def test_cli_manifest_round_trip_reproduces_outputs_bitwise(tmp_path):
    out_a = tmp_path / "a"
    assert main(["run", "cable", "--dp", "0.1", "--t-end", "3e-4",
                 "--alpha", "0.25", "--out", str(out_a)]) == 0
    manifest_path = out_a / "cable" / "manifest.json"
    out_b = tmp_path / "b"
    assert main(["run", "cable", "--config", str(manifest_path),
                 "--out", str(out_b)]) == 0
    for name in ("tip_velocity.csv", "tip_displacement.csv", "conservation.csv"):
        assert (out_a / "cable" / name).read_bytes() == (out_b / "cable" / name).read_bytes()


def test_cli_config_file_overridden_by_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dp": 0.2, "alpha": 0.1}))
    out = tmp_path / "runs"
    assert main(["run", "cable", "--config", str(cfg), "--dp", "0.1",
                 "--t-end", "0", "--out", str(out)]) == 0
    manifest = json.loads((out / "cable" / "manifest.json").read_text())
    assert manifest["dp"] == 0.1      # flag wins
    assert manifest["alpha"] == 0.1   # file overrides preset


def test_cli_rejects_malformed_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "cable", "--config", str(bad)]) == 2
    wrong_case = tmp_path / "wrong.json"
    wrong_case.write_text(json.dumps({"case": "bending"}))
    assert main(["run", "cable", "--config", str(wrong_case)]) == 2
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"dq": 1}))
    assert main(["run", "cable", "--config", str(unknown)]) == 2


def test_cli_numerical_failure_exit_code(tmp_path, capsys):
    cfg = tmp_path / "violent.json"
    cfg.write_text(json.dumps({"v0": 1e7, "dp": 0.1, "t_end": 1e-3}))
    code = main(["run", "cable", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 3
    err = capsys.readouterr().err
    assert "t = " in err  # the failing simulation time is printed


def test_cli_stl_case_runs_bundled_fixture(tmp_path):
    mesh_path = tmp_path / "tube.stl"
    write_stl_file(tube_mesh(segments=24), mesh_path, binary=True)
    out = tmp_path / "runs"
    code = main(["run", "stl", "--stl", str(mesh_path), "--dp", "0.04",
                 "--t-end", "1e-3", "--out", str(out)])
    assert code == 0
    assert (out / "stl" / "center_velocity.csv").exists()


def test_cli_twisting_damping_toggle(tmp_path):
    out = tmp_path / "r"
    base = ["run", "twisting", "--dp", "0.25", "--t-end", "5e-3", "--omega0", "105"]
    assert main(base + ["--out", str(out / "on")]) == 0
    assert main(base + ["--no-damping", "--out", str(out / "off")]) == 0
    m_on = json.loads((out / "on" / "twisting" / "manifest.json").read_text())
    m_off = json.loads((out / "off" / "twisting" / "manifest.json").read_text())
    assert m_on["alpha"] == 0.5 and m_off["alpha"] == 0.0
    assert m_on["omega0"] == 105.0
    va = (out / "on" / "twisting" / "free_end_velocity.csv").read_bytes()
    vb = (out / "off" / "twisting" / "free_end_velocity.csv").read_bytes()
    assert va != vb  # the damper must change the trajectory


def test_cli_verify_quick(capsys):
    assert main(["verify", "--quick"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 6
    assert "FAIL" not in out


def test_manifest_params_round_trip_resolves_identically():
    params = default_parameters("twisting")
    params.update(dp=0.25, t_end=0.01)
    cfg = make_config(params)
    again = make_config(config_to_params(cfg))
    assert config_to_params(again) == config_to_params(cfg)
