"""Smoke suite for the figures package: every kind renders from the
golden CSVs, output is byte-identical across runs, and malformed input
fails with a column diagnostic."""

import os
import subprocess
import sys

import numpy as np
import pytest

from figures import FigureKind, FigureSpec, load_csv, main, plot

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")
BOX_EQUIP = os.path.join(GOLDEN, "box_equip4.csv")
BOX_FIXED = os.path.join(GOLDEN, "box_scheme1.csv")
KEPLER = os.path.join(GOLDEN, "kepler_scheme3.csv")


def _render(tmp_path, name, **kw):
    out = tmp_path / name
    path = plot(FigureSpec(output=str(out), **kw))
    data = out.read_bytes()
    assert path == str(out)
    assert data.startswith(b"<?xml") and len(data) > 1000
    return data


@pytest.mark.parametrize(
    "kind,inputs",
    [
        (FigureKind.Orbit, (BOX_FIXED,)),
        (FigureKind.DefectSeries, (BOX_EQUIP, BOX_FIXED)),
        (FigureKind.LambdaDistribution, (BOX_EQUIP,)),
    ],
)
def test_each_kind_renders_byte_identically(tmp_path, kind, inputs):
    first = _render(tmp_path, "a.svg", kind=kind, inputs=inputs)
    second = _render(tmp_path, "b.svg", kind=kind, inputs=inputs)
    assert first == second
    assert b"dc:date" not in first.lower()  # no timestamp metadata


def test_multi_input_orbit_renders(tmp_path):
    first = _render(
        tmp_path, "orbits.svg",
        kind=FigureKind.Orbit, inputs=(BOX_FIXED, KEPLER),
        labels=("box", "kepler"), xlim=(-1.5, 1.5),
    )
    second = _render(
        tmp_path, "orbits2.svg",
        kind=FigureKind.Orbit, inputs=(BOX_FIXED, KEPLER),
        labels=("box", "kepler"), xlim=(-1.5, 1.5),
    )
    assert first == second


def test_lambda_histogram_centres_on_half():
    table = load_csv(BOX_EQUIP)
    lam = table["lambda"]
    assert abs(float(np.mean(lam)) - 0.5) <= 1e-3
    assert np.all((lam > 0.0) & (lam < 1.0))


def test_load_csv_parses_schema():
    table = load_csv(KEPLER)
    assert table.dim == 2
    assert table.invariant_labels == ("L",)
    assert table["t"].shape == table["H_defect"].shape
    assert table["step"][0] == 0.0


def test_empty_csv_is_an_error(tmp_path, capsys):
    bad = tmp_path / "empty.csv"
    bad.write_text("step,t,p1,q1,H,H_defect,lambda\n", encoding="utf-8")
    assert main(["orbit", "--in", str(bad), "--out", str(tmp_path / "x.svg")]) == 2
    assert "no data rows" in capsys.readouterr().err


def test_schema_mismatch_reports_columns(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,value\n0,1\n", encoding="utf-8")
    assert main(["defect-series", "--in", str(bad), "--out", str(tmp_path / "x.svg")]) == 2
    err = capsys.readouterr().err
    assert "expected step,t,p1..pd" in err and "time" in err


def test_failed_footer_rows_are_dropped(tmp_path):
    src = open(BOX_FIXED, encoding="utf-8").read().splitlines()
    clipped = tmp_path / "clipped.csv"
    clipped.write_text("\n".join(src[:12] + ["FAILED,11,solver stalled"]) + "\n",
                       encoding="utf-8")
    table = load_csv(str(clipped))
    assert len(table["t"]) == 11


def test_orbit_requires_two_coordinates(tmp_path, capsys):
    one_d = tmp_path / "one.csv"
    one_d.write_text("step,t,p1,q1,H,H_defect,lambda\n0,0.0,1.0,0.0,0.5,0.0,0.5\n",
                     encoding="utf-8")
    assert main(["orbit", "--in", str(one_d), "--out", str(tmp_path / "x.svg")]) == 2
    assert "dim >= 2" in capsys.readouterr().err


def test_spec_validation(tmp_path):
    with pytest.raises(ValueError):
        FigureSpec(kind=FigureKind.Orbit, inputs=(), output="x.svg")
    with pytest.raises(ValueError):
        FigureSpec(kind=FigureKind.Orbit, inputs=(BOX_FIXED,), output="x.svg",
                   labels=("a", "b"))
    with pytest.raises(ValueError):
        FigureSpec(kind=FigureKind.Orbit, inputs=(BOX_FIXED,), output="x.svg",
                   xlim=(2.0, 1.0))


def test_console_entry_point(tmp_path):
    out = tmp_path / "cli.svg"
    proc = subprocess.run(
        [sys.executable, "-m", "figures", "lambda-distribution",
         "--in", BOX_EQUIP, "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.stat().st_size > 1000
