"""Command-line behaviour: CSV schema, determinism, spec overlay, exit
codes, and failure footers."""

import json
import subprocess
import sys

import pytest

from sympint.cli import main


def run_cli(*argv):
    return main(list(argv))


def read_lines(path):
    return path.read_text(encoding="utf-8").splitlines()


# ---------------------------------------------------------------- run


def test_run_csv_header_and_first_row(tmp_path):
    out = tmp_path / "box.csv"
    code = run_cli(
        "run", "--problem", "henon-heiles", "--orbit", "box",
        "--scheme", "scheme1", "--lambda", "0.5",
        "--h", "0.02", "--t-end", "1.0", "--out", str(out),
    )
    assert code == 0
    lines = read_lines(out)
    assert lines[0] == "step,t,p1,p2,q1,q2,H,H_defect,lambda"
    assert lines[1] == "0,0.0,0.18140678414362935,0.0,0.0,-0.082,0.02,0.0,0.5"
    assert len(lines) == 1 + 51  # header + states 0..50


def test_run_emits_invariant_column_for_central_force(tmp_path):
    out = tmp_path / "kep.csv"
    assert run_cli(
        "run", "--problem", "kepler", "--scheme", "scheme3",
        "--lambda", "0.3333", "--h", "0.02", "--t-end", "1.0",
        "--out", str(out),
    ) == 0
    lines = read_lines(out)
    assert lines[0] == "step,t,p1,p2,q1,q2,H,H_defect,L,lambda"
    row0 = lines[1].split(",")
    assert row0[lines[0].split(",").index("L")] == "0.8"


def test_run_stride_samples_every_nth_state(tmp_path):
    out = tmp_path / "s.csv"
    assert run_cli(
        "run", "--problem", "oscillator", "--scheme", "scheme1",
        "--h", "0.02", "--t-end", "1.0", "--stride", "10",
        "--out", str(out),
    ) == 0
    lines = read_lines(out)
    assert len(lines) == 1 + 6  # steps 0,10,20,30,40,50
    assert [row.split(",")[0] for row in lines[1:]] == ["0", "10", "20", "30", "40", "50"]


def test_run_is_byte_deterministic(tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        assert run_cli(
            "run", "--problem", "kepler", "--scheme", "equip5",
            "--h", "0.02", "--t-end", "2.0", "--out", str(out),
        ) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_run_lambda_column_tracks_per_step_roots(tmp_path):
    out = tmp_path / "eq.csv"
    assert run_cli(
        "run", "--problem", "kepler", "--scheme", "equip4",
        "--h", "0.02", "--t-end", "1.0", "--out", str(out),
    ) == 0
    lines = read_lines(out)
    idx = lines[0].split(",").index("lambda")
    lams = [float(row.split(",")[idx]) for row in lines[1:]]
    assert lams[0] == 0.5  # configured start value
    assert all(0.0 < x < 1.0 for x in lams)
    assert any(x != 0.5 for x in lams[1:])  # the root moves off 1/2
    h_defects = [float(row.split(",")[lines[0].split(",").index("H_defect")]) for row in lines[1:]]
    assert max(abs(d) for d in h_defects) <= 1e-12


def test_run_failure_writes_partial_csv_with_footer(tmp_path, capsys):
    out = tmp_path / "fail.csv"
    code = run_cli(
        "run", "--problem", "oscillator", "--scheme", "scheme1",
        "--h", "300.0", "--t-end", "600.0", "--out", str(out),
    )
    assert code == 1
    lines = read_lines(out)
    assert lines[-1].startswith("FAILED,1,")
    assert len(lines) == 3  # header, state 0, footer
    captured = capsys.readouterr()
    assert captured.out.startswith("FAILED ")


def test_run_summary_line_and_json(capsys, tmp_path):
    code = run_cli(
        "run", "--problem", "oscillator", "--scheme", "scheme3",
        "--h", "0.1", "--t-end", "1.0", "--json",
    )
    assert code == 0
    out_lines = capsys.readouterr().out.strip().splitlines()
    assert out_lines[0].startswith("ok steps=10 rows=0 max_energy_defect=")
    payload = json.loads(out_lines[-1])
    assert set(payload) == {
        "spec", "max_energy_defect", "invariant_defects", "rows_written", "wall_seconds",
    }
    assert payload["spec"]["scheme"] == "scheme3"
    assert payload["max_energy_defect"] <= 1e-12
    assert payload["rows_written"] == 0


def test_run_explicit_initial_state(tmp_path):
    out = tmp_path / "init.csv"
    assert run_cli(
        "run", "--problem", "free", "--scheme", "scheme1",
        "--h", "0.5", "--t-end", "1.0",
        "--p0", "2.0", "--q0", "-1.0", "--out", str(out),
    ) == 0
    lines = read_lines(out)
    assert lines[1].split(",")[2:4] == ["2.0", "-1.0"]
    assert lines[-1].split(",")[3] == "1.0"  # q after t=1 of straight-line motion


# ---------------------------------------------------------------- spec files


def test_spec_file_overlay_and_flag_precedence(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({
        "problem": "oscillator", "scheme": "scheme1", "lam": 0.0,
        "h": 0.1, "t_end": 1.0,
    }), encoding="utf-8")
    assert run_cli("run", "--spec", str(spec), "--json", "--lambda", "0.5") == 0
    payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert payload["spec"]["lam"] == 0.5  # flag wins over file
    assert payload["spec"]["problem"] == "oscillator"


def test_spec_file_rejects_unknown_fields(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"problem": "oscillator", "stepsize": 0.1}), encoding="utf-8")
    assert run_cli("run", "--spec", str(spec)) == 2
    assert "stepsize" in capsys.readouterr().err


# ---------------------------------------------------------------- converge


def test_converge_prints_second_order_table(capsys):
    code = run_cli(
        "converge", "--problem", "oscillator", "--scheme", "scheme3",
        "--lambda", "0.3333333333333333", "--t-end", "1.0",
        "--h0", "0.1", "--levels", "4",
    )
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].split() == ["h", "error", "order"]
    assert len(lines) == 1 + 3  # levels - 1 comparison rows
    first = lines[1].split()
    assert float(first[0]) == 0.1 and len(first) == 2  # no order on row 0
    for row in lines[2:]:
        assert abs(float(row.split()[2]) - 2.0) < 0.1


def test_converge_csv_export(tmp_path, capsys):
    out = tmp_path / "conv.csv"
    assert run_cli(
        "converge", "--problem", "oscillator", "--scheme", "scheme1",
        "--lambda", "0.0", "--t-end", "1.0",
        "--h0", "0.1", "--levels", "3", "--out", str(out),
    ) == 0
    lines = read_lines(out)
    assert lines[0] == "h,error,order"
    assert lines[1].endswith(",")  # first row has no order
    h_vals = [float(row.split(",")[0]) for row in lines[1:]]
    assert h_vals == [0.1, 0.05]


def test_converge_rejects_single_level(capsys):
    assert run_cli(
        "converge", "--problem", "oscillator", "--scheme", "scheme1",
        "--h0", "0.1", "--levels", "1", "--t-end", "1.0",
    ) == 2
    assert "levels" in capsys.readouterr().err


# ---------------------------------------------------------------- symcheck


def test_symcheck_passes_for_symplectic_scheme(capsys):
    code = run_cli(
        "symcheck", "--problem", "henon-heiles", "--scheme", "scheme1",
        "--lambda", "1.5", "--h", "0.01", "--trials", "5",
    )
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith("PASS scheme=scheme1 lambda=1.5")


def test_symcheck_fails_for_averaged_gradient_map(capsys):
    code = run_cli(
        "symcheck", "--problem", "kepler", "--scheme", "avf",
        "--h", "0.05", "--trials", "5",
    )
    assert code == 1
    assert capsys.readouterr().out.startswith("FAIL ")


def test_symcheck_seed_is_reproducible(capsys):
    argv = (
        "symcheck", "--problem", "oscillator", "--scheme", "scheme2",
        "--lambda", "0.7", "--h", "0.01", "--trials", "4", "--json",
    )
    assert run_cli(*argv) == 0
    first = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert run_cli(*argv) == 0
    second = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert first["max_defect"] == second["max_defect"]
    assert first["verdict"] == "PASS"


def test_symcheck_rejects_parameter_search_schemes(capsys):
    assert run_cli("symcheck", "--problem", "oscillator", "--scheme", "equip4") == 2
    assert "fixed-parameter" in capsys.readouterr().err


# ---------------------------------------------------------------- errors


@pytest.mark.parametrize(
    "argv",
    [
        ("run", "--problem", "oscillator", "--scheme", "scheme1",
         "--h", "0.03", "--t-end", "1.0"),          # t_end not a multiple of h
        ("run", "--problem", "oscillator", "--scheme", "scheme1",
         "--h", "0.1", "--t-end", "1.0", "--stride", "0"),
        ("run", "--problem", "free", "--scheme", "scheme1",
         "--h", "0.5", "--t-end", "1.0", "--p0", "1.0"),  # missing --q0
        ("run", "--problem", "kepler", "--scheme", "scheme1",
         "--h", "0.1", "--t-end", "1.0", "--ecc", "1.5"),
        ("run", "--spec", "/nonexistent/spec.json"),
    ],
)
def test_malformed_invocations_exit_2(argv, capsys):
    assert run_cli(*argv) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "sympint.cli", "run", "--problem", "oscillator",
         "--scheme", "scheme3", "--h", "0.1", "--t-end", "0.5"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("ok steps=5")
