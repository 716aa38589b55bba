import json
import os

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qnlcoupling import ConfigurationError, RunConfig
from qnlcoupling.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_OK, EXIT_SINGULAR, main, run
from qnlcoupling.config import PRESETS


@pytest.mark.parametrize("name", PRESETS)
def test_presets_load_and_round_trip(name):
    cfg = RunConfig.preset(name)
    assert RunConfig.loads(cfg.dumps()) == cfg


@given(
    levels=st.lists(st.integers(1, 2000), min_size=1, max_size=5).map(tuple),
    kernel=st.sampled_from(["constant", "inverse_abs"]),
    use_ratio=st.booleans(),
    ratio=st.integers(1, 10),
    delta=st.floats(1e-4, 1.0),
    scheme=st.sampled_from(["compatible", "direct"]),
    seed=st.integers(0, 2**64 - 1),
    x=st.floats(-0.9, 0.9),
)
def test_round_trip_property(levels, kernel, use_ratio, ratio, delta, scheme, seed, x):
    cfg = RunConfig(
        levels=levels,
        kernel=kernel,
        ratio=ratio if use_ratio else None,
        delta=None if use_ratio else delta,
        interfaces=(x,),
        scheme=scheme,
        seed=seed,
    )
    assert RunConfig.loads(cfg.dumps()) == cfg


def test_exactly_one_of_ratio_and_delta():
    with pytest.raises(ConfigurationError):
        RunConfig(ratio=3, delta=0.1)
    with pytest.raises(ConfigurationError):
        RunConfig.loads("kernel: {type: constant, ratio: 3, delta: 0.1}\n")


def test_delta_must_be_grid_multiple():
    cfg = RunConfig(ratio=None, delta=0.1, levels=(64,))
    with pytest.raises(ConfigurationError, match="integer multiple"):
        cfg.validate()


@pytest.mark.parametrize(
    "text",
    [
        "kernel: {type: gaussian}\n",
        "scheme: implicit\n",
        "mesh: {N: [0]}\n",
        "surprise: 1\n",
        "mesh: [unclosed\n",
        "- a list\n",
        "mesh: {N: [ten]}\n",
    ],
)
def test_bad_configs_rejected(text):
    with pytest.raises(ConfigurationError):
        RunConfig.loads(text)


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        RunConfig.preset("table3")


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ConfigurationError):
        RunConfig(output=str(blocker / "sub")).validate()


# -- CLI ------------------------------------------------------------------------

def listing(path):
    return sorted(os.listdir(path)) if os.path.isdir(path) else []


def test_off_grid_interface_exit_1_and_no_files(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("mesh: {N: [64]}\narrangement: {type: nonlocal_local, interfaces: [0.013]}\n")
    out = tmp_path / "out"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == EXIT_CONFIG
    assert "0.013" in capsys.readouterr().err
    assert not out.exists()


def test_bad_flags_exit_1(tmp_path, capsys):
    assert main(["solve", "--N", "ten", "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["frobnicate"]) == EXIT_CONFIG
    assert main(["solve", "--preset", "nope", "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["solve", "--config", str(tmp_path / "missing.yaml"), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert listing(tmp_path) == []


def test_check_without_reference_is_config_error(tmp_path):
    out = tmp_path / "o"
    assert main(["convergence", "--preset", "default", "--check", "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()


def test_singular_system_exit_2(tmp_path, monkeypatch):
    from qnlcoupling import cli
    from qnlcoupling.errors import SingularSystemError

    def boom(*a, **k):
        raise SingularSystemError("zero pivot")

    monkeypatch.setattr(cli, "solve_problem", boom)
    out = tmp_path / "o"
    assert main(["solve", "--out", str(out)]) == EXIT_SINGULAR
    assert not out.exists()


def test_failed_check_exit_3(tmp_path, monkeypatch):
    from qnlcoupling import checks

    monkeypatch.setattr(checks, "VALUE_RTOL", 1e-6)
    monkeypatch.setattr(checks, "HALVING_RTOL", 1e-6)
    out = tmp_path / "o"
    assert main(["convergence", "--preset", "table1", "--check", "--out", str(out)]) == EXIT_CHECK
    report = json.loads((out / "check.json").read_text())
    assert report["pass"] is False


def test_convergence_table1_check(tmp_path, capsys):
    out = tmp_path / "t1"
    assert main(["convergence", "--preset", "table1", "--check", "--out", str(out)]) == EXIT_OK
    assert listing(out) == ["check.json", "convergence.csv"]
    assert "PASS" in capsys.readouterr().out
    rows = (out / "convergence.csv").read_text().splitlines()
    assert len(rows) == 6


def test_patch_test_json(tmp_path):
    out = tmp_path / "p"
    assert main(["patch-test", "--N", "16,64", "--out", str(out)]) == EXIT_OK
    data = json.loads((out / "patch_test.json").read_text(encoding="utf-8"))
    assert data["pass"] is True
    assert [c["check"] for c in data["checks"]] == ["patch_test_residual_N16", "patch_test_residual_N64"]
    assert list(data["checks"][0]) == ["check", "value", "threshold", "pass"]


def test_properties_json(tmp_path):
    out = tmp_path / "p"
    assert main(["properties", "--N", "16", "--out", str(out)]) == EXIT_OK
    data = json.loads((out / "properties.json").read_text())
    level = data["levels"][0]
    assert level["symmetry_defect"] > 0
    assert {c["check"] for c in level["checks"]} == {
        "quadratic_form_min",
        "symmetric_part_min_eigenvalue",
        "inverse_min_entry",
        "min_u_over_max_abs_u",
    }


def test_weights_csv(tmp_path):
    out = tmp_path / "w"
    assert main(["weights", "--out", str(out)]) == EXIT_OK
    lines = (out / "weights.csv").read_text().splitlines()
    assert lines[0] == "x,omega,omega_prime,a"
    assert float(lines[1].split(",")[3]) == pytest.approx(0.5)
    assert lines[-1].endswith(",")  # beyond the horizon


def test_assemble_dump(tmp_path):
    out = tmp_path / "a"
    assert main(["assemble", "--dump", "--N", "4", "--ratio", "2", "--out", str(out)]) == EXIT_OK
    rows = (out / "operator.txt").read_text().splitlines()
    assert len(rows) == 7 and all(len(r.split(" ")) == 7 for r in rows)
    labels = (out / "operator_regimes.txt").read_text().split()
    assert labels == ["nonlocal"] * 4 + ["transitional"] * 2 + ["local"]


def test_solve_csv(tmp_path):
    out = tmp_path / "s"
    assert main(["solve", "--N", "8,16", "--kernel", "inverse_abs", "--scheme", "direct", "--out", str(out)]) == 0
    assert listing(out) == ["solution_N16.csv", "solution_N8.csv"]
    assert (out / "solution_N8.csv").read_text().splitlines()[0] == "x,u,u_exact,grad_u"


def test_run_is_pure():
    res = run("solve", RunConfig(levels=(8,), output="/nonexistent-but-unused-dir"))
    assert list(res.files) == ["solution_N8.csv"]


@pytest.mark.parametrize(
    "argv",
    [
        ["convergence", "--preset", "table2"],
        ["compare-direct", "--N", "50,100"],
        ["boundary-layer", "--N", "100"],
        ["singular", "--N", "100"],
        ["properties", "--N", "16"],
    ],
    ids=lambda a: a[0],
)
def test_outputs_are_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert listing(a) == listing(b) != []
    for name in listing(a):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_report_json_fields_and_non_finite_values():
    from qnlcoupling import Report

    rep = Report()
    rep.add("a", float("inf"), 1.0, False)
    rep.add("b", 0.5, 1.0, True)
    data = json.loads(rep.to_json())
    assert data[0] == {"check": "a", "value": "inf", "threshold": 1.0, "pass": False}
    assert not rep.passed and rep["b"].passed
