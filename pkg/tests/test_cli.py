# tests/test_cli.py
"""
Tests de extremo a extremo del CLI (`python -m src.hexdetect ...`), llamando a `main(argv)`.

Se trabaja siempre en un directorio temporal para que no se cargue configs/example.yaml.
"""

import json

import pandas as pd
import pytest

from src.hexdetect.__main__ import EXIT_DATA, EXIT_OK, EXIT_USAGE, main

EXAMPLE_FLAGS = ["--p1", "0.9", "--p2", "0.5", "--pc", "0.9", "--pw", "0.01"]


@pytest.fixture(autouse=True)
def _isolated_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


def _run(*argv):
    return main([str(a) for a in argv])


# ====================================================================
# derive / exact
# ====================================================================
def test_derive_writes_one_row_per_combination(tmp_path, capsys):
    out = tmp_path / "derive"
    code = _run("derive", "--p1", "0.7,0.9", "--p2", "0.3", "--pc", "0.9", "--pw", "0.1,0.2",
                "--out", out)
    assert code == EXIT_OK
    df = pd.read_csv(out / "derive.csv")
    assert len(df) == 4
    row = df[(df.p1 == 0.9) & (df.pw == 0.1)].iloc[0]
    assert row["c"] == pytest.approx(2.421, abs=1e-3)
    assert row["d"] == pytest.approx(0.202, abs=1e-3)
    assert "alpha" in capsys.readouterr().out


def test_derive_leaves_q_columns_empty_when_p2_is_zero(tmp_path):
    out = tmp_path / "derive"
    assert _run("derive", "--p1", "0.9", "--p2", "0", "--pc", "0.9", "--pw", "0.01",
                "--out", out) == EXIT_OK
    df = pd.read_csv(out / "derive.csv")
    assert df.loc[0, "beta"] == 0.0
    assert df[["c", "d", "tau0"]].isna().all(axis=None)


def test_exact_tables(tmp_path):
    out = tmp_path / "exact"
    assert _run("exact", *EXAMPLE_FLAGS, "--grid", "32x32", "--out", out) == EXIT_OK
    joint = pd.read_csv(out / "joint_tables.csv")
    # las etiquetas de modelo sobreviven a read_csv (sin NA)
    assert set(joint["model"]) == {"normal", "event"}
    for (model, k), group in joint.groupby(["model", "k"]):
        assert len(group) == 2 * (k + 1)
        assert group["probability"].sum() == pytest.approx(1.0, abs=1e-5)
    errors = pd.read_csv(out / "error_probabilities.csv")
    assert list(errors["k"]) == list(range(7))
    assert errors.loc[6, "miss"] == pytest.approx(0.029762, abs=1e-6)
    bounds = pd.read_csv(out / "false_positive_bounds.csv")
    assert bounds.loc[0, "lower"] == pytest.approx(0.049010, abs=1e-6)
    assert bounds.loc[0, "upper"] == 1.0


# ====================================================================
# simulate / sweep
# ====================================================================
def test_simulate_is_byte_identical_across_runs(tmp_path):
    args = ["simulate", *EXAMPLE_FLAGS, "--grid", "8x8", "--reps", "1200", "--seed", "3",
            "--trace"]
    assert _run(*args, "--out", tmp_path / "a") == EXIT_OK
    assert _run(*args, "--out", tmp_path / "b", "--workers", "2") == EXIT_OK
    for name in ("simulate.csv", "trace.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    df = pd.read_csv(tmp_path / "a" / "simulate.csv")
    assert len(df) == 1
    assert df.loc[0, "S2"] <= df.loc[0, "S3"] <= df.loc[0, "S4"]
    assert df.loc[0, "replications"] == 1200
    trace = pd.read_csv(tmp_path / "a" / "trace.csv")
    assert len(trace) == 2400
    assert set(trace["scenario"]) == {"normal", "event"}


def test_simulate_parameter_grid(tmp_path):
    out = tmp_path / "grid"
    code = _run("simulate", "--p1", "0.9", "--p2", "0.3,0.5", "--pc", "0.9", "--pw", "0.01",
                "--grid", "6x6", "--reps", "50", "--scenario", "event", "--out", out)
    assert code == EXIT_OK
    df = pd.read_csv(out / "simulate.csv")
    assert list(df["p2"]) == [0.3, 0.5]
    assert df["S1"].isna().all()


def test_simulate_rows_describe_their_detector_settings(tmp_path):
    out = tmp_path / "settings"
    code = _run("simulate", *EXAMPLE_FLAGS, "--grid", "8x8", "--reps", "50", "--interior-only",
                "--p-norm", "0.5", "--event-node", "3,3", "--out", out)
    assert code == EXIT_OK
    row = pd.read_csv(out / "simulate.csv").iloc[0]
    assert bool(row["interior_only"]) is True
    assert row["p_norm"] == 0.5
    assert row["event_node"] == "3,3"

    plain = tmp_path / "plain"
    assert _run("sweep", *EXAMPLE_FLAGS, "--grid", "8x8", "--reps", "50", "--out", plain) == 0
    sweep = pd.read_csv(plain / "sweep.csv")
    assert not sweep["interior_only"].any()
    assert sweep["p_norm"].isna().all() and sweep["event_node"].isna().all()


def test_sweep_writes_each_threshold(tmp_path):
    out = tmp_path / "sweep"
    code = _run("sweep", *EXAMPLE_FLAGS, "--grid", "8x8", "--reps", "300",
                "--sweep-c", "0.6,0.9", "--out", out)
    assert code == EXIT_OK
    df = pd.read_csv(out / "sweep.csv")
    assert list(df["C"]) == [0.6, 0.9]
    assert df.loc[1, "success"] <= df.loc[0, "success"]
    assert df.loc[1, "search"] <= df.loc[0, "search"]


def test_yaml_config_is_used_and_copied(tmp_path):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(
        "params: {p1: 0.9, p2: 0.5, pc: 0.9, pw: 0.01}\n"
        "grid: {rows: 6, cols: 6}\n"
        "simulation: {replications: 40, seed: 9, scenario: normal}\n",
        encoding="utf-8",
    )
    out = tmp_path / "yaml"
    assert _run("simulate", "--config", cfg, "--out", out) == EXIT_OK
    df = pd.read_csv(out / "simulate.csv")
    assert (df.loc[0, "rows"], df.loc[0, "replications"], df.loc[0, "seed"]) == (6, 40, 9)
    manifest = json.loads((out / "run_manifest.json").read_text(encoding="utf-8"))
    assert manifest["config_yaml_copy"] == "config_used.yaml"
    assert (out / "config_used.yaml").exists()


# ====================================================================
# record -> calibrate
# ====================================================================
def test_record_then_calibrate(tmp_path):
    rec = tmp_path / "rec"
    code = _run("record", *EXAMPLE_FLAGS, "--grid", "8x8", "--normal-runs", "40",
                "--event-runs", "400", "--seed", "5", "--out", rec)
    assert code == EXIT_OK
    runs = rec / "runs.txt"
    assert runs.read_text(encoding="utf-8").startswith("# hexdetect-runs v1 rows=8 cols=8")

    cal = tmp_path / "cal"
    assert _run("calibrate", runs, "--out", cal) == EXIT_OK
    df = pd.read_csv(cal / "calibration.csv").set_index("parameter")
    assert list(df.index) == ["p1", "p2", "pc", "pw", "pw_normal"]
    assert df.loc["pw_normal", "true_value"] == 0.01
    for name in ("p1", "p2", "pc"):
        est = df.loc[name]
        assert abs(est["estimate"] - est["true_value"]) <= 3 * est["se"] + 1e-6


def test_record_needs_a_single_combination(tmp_path):
    code = _run("record", "--p1", "0.9", "--p2", "0.3,0.5", "--pc", "0.9", "--pw", "0.01",
                "--out", tmp_path / "rec")
    assert code == EXIT_DATA


# ====================================================================
# Códigos de salida y manifest
# ====================================================================
def test_manifest_is_written(tmp_path):
    out = tmp_path / "m"
    assert _run("derive", *EXAMPLE_FLAGS, "--out", out) == EXIT_OK
    manifest = json.loads((out / "run_manifest.json").read_text(encoding="utf-8"))
    assert manifest["schema_version"] == 1
    assert manifest["config_effective"]["command"] == "derive"
    assert manifest["outputs"]["derive_csv"].endswith("derive.csv")
    assert (out / "log.txt").exists()


def test_default_report_dir_naming(tmp_path):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(f"reports: {{output_dir: '{tmp_path / 'reports'}'}}\n", encoding="utf-8")
    assert _run("derive", *EXAMPLE_FLAGS, "--config", cfg) == EXIT_OK
    (run_dir,) = list((tmp_path / "reports").iterdir())
    assert run_dir.name.startswith("derive_") and run_dir.name.endswith("_run01")


@pytest.mark.parametrize(
    "argv",
    [
        ["derive", "--grid", "treintaydos"],
        ["simulate", "--reps", "muchas"],
        ["nada"],
        [],
    ],
)
def test_usage_errors_exit_1(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == EXIT_USAGE


@pytest.mark.parametrize(
    "argv",
    [
        ["derive", "--p1", "0.9", "--p2", "0.5", "--pc", "0.9"],
        ["derive", "--p1", "1.5", "--p2", "0.5", "--pc", "0.9", "--pw", "0.01"],
        ["derive", "--p1", "0.9", "--p2", "0.5", "--pc", "0.1", "--pw", "0.1"],
        ["simulate", *EXAMPLE_FLAGS, "--grid", "4x4", "--reps", "0"],
        ["simulate", *EXAMPLE_FLAGS, "--grid", "4x4", "--occam-c", "1.5"],
        ["simulate", *EXAMPLE_FLAGS, "--grid", "4x4", "--event-node", "9,9"],
        ["sweep", *EXAMPLE_FLAGS, "--grid", "4x4", "--sweep-c", "0.5,1.2"],
        ["exact", *EXAMPLE_FLAGS, "--grid", "0x4"],
        ["derive", "--config", "no-existe.yaml"],
    ],
)
def test_data_errors_exit_2(tmp_path, argv):
    assert main([*argv, "--out", str(tmp_path / "o")]) == EXIT_DATA


def test_calibrate_empty_or_missing_file(tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("", encoding="utf-8")
    assert _run("calibrate", empty, "--out", tmp_path / "c1") == EXIT_DATA
    assert _run("calibrate", tmp_path / "missing.txt", "--out", tmp_path / "c2") == EXIT_DATA
    bad = tmp_path / "bad.txt"
    bad.write_text("# hexdetect-runs v1 rows=3 cols=3\nnormal - - zz\n", encoding="utf-8")
    assert _run("calibrate", bad, "--out", tmp_path / "c3") == EXIT_DATA


def test_calibrate_normal_only_file_is_a_data_error(tmp_path, capsys):
    rec = tmp_path / "rec"
    code = _run("record", *EXAMPLE_FLAGS, "--grid", "6x6", "--normal-runs", "5",
                "--event-runs", "0", "--out", rec)
    assert code == EXIT_OK
    cal = tmp_path / "cal"
    assert _run("calibrate", rec / "runs.txt", "--out", cal) == EXIT_DATA
    err = capsys.readouterr().err
    assert "p1, p2, pc" in err
    assert not (cal / "calibration.csv").exists()
