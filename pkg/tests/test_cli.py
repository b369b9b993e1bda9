import csv
import json
import shutil
import subprocess
import sys

import pytest

from padiclab.cli import main


def run(tmp_path, command, cfg, *extra, name="out"):
    cfg_path = tmp_path / f"{name}.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / name
    code = main([command, "--config", str(cfg_path), "--out", str(out), "--workers", "1", *extra])
    return code, out


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_exponent_zero_vector(tmp_path):
    code, out = run(tmp_path, "exponent", {"p": 3, "y": "0", "bound": 20, "kind": "Z"})
    assert code == 0
    r = rows(out / "profile_Z.csv")
    assert r[0][:4] == ["kind", "height_inf", "height_mixed", "error"]
    assert r[1][3] == "0"
    est = json.loads((out / "estimate.json").read_text())
    assert est["estimates"]["Z"]["value"] == "inf"


def test_exponent_matrix_and_both_kinds(tmp_path):
    code, out = run(tmp_path, "exponent", {"p": 2, "A": [["0.1011@2"], ["1/3"]], "bound": 50})
    assert code == 0
    assert sorted(x.name for x in out.iterdir()) == ["estimate.json", "profile_Z.csv", "profile_Zp.csv"]


def test_powers_of_p_serialized_exactly(tmp_path):
    code, out = run(tmp_path, "flow", {"p": 3, "y": "0", "t_max": 4})
    assert code == 0
    deltas = [r[1] for r in rows(out / "trajectory.csv")[1:]]
    assert deltas == ["3^0", "3^(-1/2)", "3^-1", "3^(-3/2)", "3^-2"]


def test_covolume_random_all_equal(tmp_path):
    code, out = run(tmp_path, "covolume", {"p": 2, "instances": 100, "t_max": 10}, "--seed", "5")
    assert code == 0
    r = rows(out / "covolume.csv")
    assert r[0] == ["index", "n", "j", "t", "formula", "oracle", "equal"]
    assert len(r) == 101 and all(x[6] == "true" for x in r[1:])


def test_covolume_explicit_instance(tmp_path):
    cfg = {"p": 3, "instances": [{"basis": [["1", "0", "0"]], "y": "0.12@3,0.21@3", "t": 3}]}
    code, out = run(tmp_path, "covolume", cfg)
    assert code == 0
    assert rows(out / "covolume.csv")[1][4:] == ["3^2", "3^2", "true"]


def test_subspace_outputs(tmp_path):
    cfg = {"p": 3, "n": 3, "s": 1, "A": [["1/2", "0.2101120212@3"], ["2", "1/7"]], "bound": 50}
    code, out = run(tmp_path, "subspace", cfg)
    assert code == 0
    names = sorted(x.name for x in out.iterdir())
    assert names == ["subspace.json", "witnesses_j1.csv", "witnesses_j2.csv", "wjp.csv"]
    summary = json.loads((out / "subspace.json").read_text())
    assert summary["param"]["n"] == 3 and float(summary["w_p_L"]) >= 3


def test_verify_rational(tmp_path):
    code, out = run(tmp_path, "verify", {"p": 2, "y": "1/3", "v": "3", "t_max": 10, "height_bound": 100})
    assert code == 0
    rep = json.loads((out / "correspondence.json").read_text())
    assert rep["ok"] and rep["side2"]


def test_lab_requires_seed(tmp_path):
    code, out = run(tmp_path, "lab", {"p": 3, "experiment": "qnd", "map": {"veronese": 2}, "t": 3, "trials": 5})
    assert code == 2 and not out.exists()


def test_lab_experiments(tmp_path):
    code, out = run(tmp_path, "lab", {"p": 2, "experiment": "good_fit", "map": {"veronese": 1}, "samples": 1000}, "--seed", "1", name="g")
    assert code == 0 and json.loads((out / "good_fit.json").read_text())["seed"] == 1
    cfg = {"p": 3, "experiment": "pushforward", "map": {"components": [{"1": "1"}, {"2": "1"}]}, "trials": 3, "bound": 500}
    code, out = run(tmp_path, "lab", cfg, "--seed", "2", name="pf")
    assert code == 0 and len(json.loads((out / "pushforward.json").read_text())["estimates"]) == 3


@pytest.mark.parametrize(
    "command,cfg",
    [
        ("exponent", {"p": 3, "A": [["1", "x"]], "bound": 10}),
        ("exponent", {"p": 4, "y": "1", "bound": 10}),
        ("subspace", {"p": 3, "n": 3, "s": 1, "A": [["1"]], "bound": 10}),
        ("flow", {"p": 2, "t_max": 3}),
        ("lab", {"p": 3, "experiment": "nope", "map": {"veronese": 2}}),
    ],
)
def test_malformed_input_exits_2_without_files(tmp_path, command, cfg):
    code, out = run(tmp_path, command, cfg, "--seed", "1")
    assert code == 2
    assert not out.exists()


def test_precision_exhausted_exits_3(tmp_path):
    code, _ = run(tmp_path, "flow", {"p": 2, "y": "0.101@2", "t_max": 20})
    assert code == 3


def test_budget_exhausted_exits_4_with_flagged_output(tmp_path):
    cfg = {"p": 2, "y": "0.1011011101000101110110101110100101110101101011101010011010110101@2,0.0110101110101101001011101011010101110100101011010101010110110101@2", "t": [40], "budget": 1}
    code, out = run(tmp_path, "flow", cfg)
    assert code == 4
    r = rows(out / "trajectory.csv")
    assert r[0][-1] == "complete" and r[1][-1] == "false"


def test_set_overrides_config(tmp_path):
    code, out = run(tmp_path, "flow", {"p": 2, "y": "0", "t_max": 9}, "--set", "t_max=2")
    assert code == 0 and len(rows(out / "trajectory.csv")) == 4


def test_byte_identical_reruns(tmp_path):
    cfg = {"p": 3, "experiment": "qnd", "map": {"veronese": 2}, "t": 4, "trials": 8}
    _, a = run(tmp_path, "lab", cfg, "--seed", "7", name="a")
    cfg_path = tmp_path / "a.json"
    out_b = tmp_path / "b"
    assert main(["lab", "--config", str(cfg_path), "--out", str(out_b), "--seed", "7", "--workers", "2"]) == 0
    assert (a / "qnd.json").read_bytes() == (out_b / "qnd.json").read_bytes()
    assert b"\r\n" not in (a / "qnd.json").read_bytes()


def test_console_script(tmp_path):
    exe = shutil.which("padiclab")
    cmd = [exe] if exe else [sys.executable, "-m", "padiclab.cli"]
    res = subprocess.run(cmd + ["flow", "--set", "p=2", "--set", "y=\"0\"", "--set", "t_max=1", "--out", str(tmp_path)], capture_output=True)
    assert res.returncode == 0
    assert (tmp_path / "trajectory.csv").exists()
