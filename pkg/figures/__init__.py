"""Deterministic SVG figures from integrator CSV exports.

Pure consumer of the ``sympint`` CLI CSV schema

    step,t,p1..pd,q1..qd,H,H_defect,<invariant labels...>,lambda

(a trailing ``FAILED,...`` footer from aborted runs is tolerated and the
rows before it are used).  No numerics are recomputed here; the module
only reads, validates, and draws.  Three figure kinds:

* ``orbit``: q1 vs q2 for each input file;
* ``defect-series``: |H_defect| vs t, log scale by default;
* ``lambda-distribution``: per-step lambda vs step index plus a
  histogram.

Rendering is deterministic: fixed figure geometry and fonts, a fixed
SVG hash salt, and no embedded timestamps, so the same inputs always
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import enum
import os
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["FigureKind", "FigureSpec", "RunTable", "load_csv", "plot", "main"]

#: rcParams pinned for byte-identical SVG output.
_DETERMINISTIC_RC = {
    "figure.figsize": (6.0, 4.5),
    "figure.dpi": 100,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "svg.hashsalt": "figures",
    "svg.fonttype": "path",
    "path.simplify": False,
}


class FigureKind(enum.Enum):
    Orbit = "orbit"
    DefectSeries = "defect-series"
    LambdaDistribution = "lambda-distribution"


@dataclass(frozen=True)
class FigureSpec:
    """One figure to render: kind, labelled inputs, output, axis options."""

    kind: FigureKind
    inputs: Tuple[str, ...]
    output: str
    labels: Tuple[str, ...] = ()
    log_y: Optional[bool] = None  # None: kind-dependent default
    xlim: Optional[Tuple[float, float]] = None
    ylim: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        labels = self.labels or tuple(
            os.path.splitext(os.path.basename(p))[0] for p in self.inputs
        )
        if len(labels) != len(self.inputs):
            raise ValueError(
                f"{len(self.inputs)} inputs but {len(labels)} labels"
            )
        object.__setattr__(self, "labels", tuple(str(x) for x in labels))
        for name in ("xlim", "ylim"):
            rng = getattr(self, name)
            if rng is not None and not rng[0] < rng[1]:
                raise ValueError(f"{name} must be an increasing (lo, hi) pair")


@dataclass(frozen=True)
class RunTable:
    """Parsed CSV: named columns of equal length, ``dim`` recovered from
    the header."""

    path: str
    dim: int
    columns: Dict[str, np.ndarray]
    invariant_labels: Tuple[str, ...]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]


def _schema_error(path: str, header: List[str], why: str) -> ValueError:
    return ValueError(
        f"{path}: not a run CSV ({why}); header columns are {header!r}, "
        "expected step,t,p1..pd,q1..qd,H,H_defect,<labels...>,lambda"
    )


def _parse_header(path: str, header: List[str]) -> Tuple[int, Tuple[str, ...]]:
    if len(header) < 5 or header[:2] != ["step", "t"] or header[-1] != "lambda":
        raise _schema_error(path, header, "missing fixed columns")
    body = header[2:-1]
    dim = 0
    while 2 * dim + 2 <= len(body) and body[dim] == f"p{dim + 1}":
        dim += 1
    expected = [f"p{i + 1}" for i in range(dim)] + [f"q{i + 1}" for i in range(dim)]
    if dim == 0 or body[: 2 * dim] != expected:
        raise _schema_error(path, header, "p1..pd,q1..qd block malformed")
    rest = body[2 * dim:]
    if rest[:2] != ["H", "H_defect"]:
        raise _schema_error(path, header, "H,H_defect block malformed")
    return dim, tuple(rest[2:])


def load_csv(path: str) -> RunTable:
    """Read and validate one run CSV; raises ValueError with a column
    diagnostic on any schema mismatch and on empty tables."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty file")
    header = lines[0].split(",")
    dim, labels = _parse_header(path, header)
    rows: List[List[float]] = []
    for line in lines[1:]:
        cells = line.split(",")
        if cells[0] == "FAILED":
            break  # footer of an aborted run; keep the rows before it
        if len(cells) != len(header):
            raise _schema_error(
                path, header, f"row with {len(cells)} cells does not match header"
            )
        try:
            rows.append([float(c) for c in cells])
        except ValueError as err:
            raise _schema_error(path, header, f"non-numeric cell ({err})") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.array(rows)
    columns = {name: data[:, i].copy() for i, name in enumerate(header)}
    return RunTable(path=path, dim=dim, columns=columns, invariant_labels=labels)


def _apply_axes(ax, spec: FigureSpec) -> None:
    if spec.xlim is not None:
        ax.set_xlim(*spec.xlim)
    if spec.ylim is not None:
        ax.set_ylim(*spec.ylim)


def _draw_orbit(fig, tables: Sequence[RunTable], spec: FigureSpec) -> None:
    ax = fig.subplots()
    for table, label in zip(tables, spec.labels):
        if table.dim < 2:
            raise ValueError(f"{table.path}: orbit figures need dim >= 2")
        ax.plot(table["q1"], table["q2"], lw=0.5, label=label)
    ax.set_xlabel("q1")
    ax.set_ylabel("q2")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="upper right", fontsize=8)
    _apply_axes(ax, spec)


def _draw_defect_series(fig, tables: Sequence[RunTable], spec: FigureSpec) -> None:
    ax = fig.subplots()
    log_y = True if spec.log_y is None else spec.log_y
    for table, label in zip(tables, spec.labels):
        defect = np.abs(table["H_defect"])
        if log_y:
            # a log axis cannot show exact zeros (e.g. the t=0 row)
            defect = np.maximum(defect, 1e-18)
            ax.semilogy(table["t"], defect, lw=0.6, label=label)
        else:
            ax.plot(table["t"], defect, lw=0.6, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("|energy defect|")
    ax.legend(loc="upper right", fontsize=8)
    _apply_axes(ax, spec)


def _draw_lambda_distribution(fig, tables: Sequence[RunTable], spec: FigureSpec) -> None:
    ax_series, ax_hist = fig.subplots(1, 2)
    for table, label in zip(tables, spec.labels):
        lam = table["lambda"]
        ax_series.plot(table["step"], lam, ".", ms=1.5, label=label)
        ax_hist.hist(lam, bins=60, histtype="step", label=label)
    ax_series.set_xlabel("step")
    ax_series.set_ylabel("lambda")
    ax_hist.set_xlabel("lambda")
    ax_hist.set_ylabel("count")
    ax_series.legend(loc="upper right", fontsize=8)
    _apply_axes(ax_series, spec)


_DRAWERS = {
    FigureKind.Orbit: _draw_orbit,
    FigureKind.DefectSeries: _draw_defect_series,
    FigureKind.LambdaDistribution: _draw_lambda_distribution,
}


def plot(spec: FigureSpec) -> str:
    """Render one figure; returns the output path.

    The output is byte-identical across repeated calls on the same
    inputs (fixed geometry and fonts, salted SVG ids, no timestamp
    metadata).
    """
    tables = [load_csv(path) for path in spec.inputs]
    with matplotlib.rc_context(_DETERMINISTIC_RC):
        fig = plt.figure()
        try:
            _DRAWERS[spec.kind](fig, tables, spec)
            fig.savefig(spec.output, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return spec.output


def _parse_range(text: Optional[str], name: str) -> Optional[Tuple[float, float]]:
    if text is None:
        return None
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"{name} must look like lo:hi")
    return float(parts[0]), float(parts[1])


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render deterministic SVG figures from run CSVs",
    )
    parser.add_argument("kind", choices=[k.value for k in FigureKind])
    parser.add_argument("--in", dest="inputs", required=True,
                        help="comma-separated CSV paths")
    parser.add_argument("--out", required=True, help="output SVG path")
    parser.add_argument("--labels", default=None,
                        help="comma-separated legend labels (default: file stems)")
    scale = parser.add_mutually_exclusive_group()
    scale.add_argument("--log", dest="log_y", action="store_true", default=None)
    scale.add_argument("--linear", dest="log_y", action="store_false")
    parser.add_argument("--xlim", default=None, help="lo:hi")
    parser.add_argument("--ylim", default=None, help="lo:hi")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(
            kind=FigureKind(args.kind),
            inputs=tuple(x for x in args.inputs.split(",") if x),
            output=args.out,
            labels=tuple(args.labels.split(",")) if args.labels else (),
            log_y=args.log_y,
            xlim=_parse_range(args.xlim, "--xlim"),
            ylim=_parse_range(args.ylim, "--ylim"),
        )
        plot(spec)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0
