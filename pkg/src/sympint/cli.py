"""Command-line front end: run experiments, build convergence tables,
and spot-check symplecticity, all exporting deterministic CSV.

CSV schema (one row per sampled step):

    step,t,p1..pd,q1..qd,H,H_defect,<invariant labels...>,lambda

Floats are printed with shortest round-trip formatting, so re-reading a
file reproduces the in-memory values exactly and identical runs produce
byte-identical files.  The lambda column holds the configured lambda on
row 0 and, on row n, the lambda used for the step into state n (for the
fixed-parameter schemes this is constant; for the energy-conserving
schemes it is the per-step root).  On a solver failure the partial CSV
ends with a `FAILED,<step>,<message>` sentinel footer and the exit code
is 1; malformed specs exit 2.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from .analysis import convergence_study, symplecticity_defect
from .equip import EnergyReference, EquipConfig, EquipFallback, integrate_equip
from .problems import (
    OrbitKind,
    PROBLEM_NAMES,
    henon_heiles_initial,
    kepler_initial,
    make_problem,
)
from .schemes import IntegrationError, SchemeConfig, SchemeId, Trajectory, integrate
from .solvers import SecantConfig, SolverConfig
from .state import HamiltonianSystem, PhaseState

__all__ = ["RunSpec", "main", "cmd_run", "cmd_converge", "cmd_symcheck"]

SCHEME_NAMES: Dict[str, object] = {
    "scheme1": SchemeId.Scheme1,
    "scheme1-adjoint": SchemeId.Scheme1Adjoint,
    "scheme2": SchemeId.Scheme2,
    "scheme3": SchemeId.Scheme3,
    "composed4": SchemeId.Composed4,
    "nystrom1": SchemeId.Nystrom1,
    "avf": SchemeId.AVF,
    "equip4": "equip4",  # energy-conserving, base scheme1
    "equip5": "equip5",  # energy-conserving, base scheme3
}

#: Default seed of the documented 64-bit LCG used for symcheck states.
DEFAULT_SEED = 12345

_LCG_MULT = 6364136223846793005
_LCG_INC = 1442695040888963407
_LCG_MASK = (1 << 64) - 1


class _Lcg:
    """x -> (6364136223846793005 x + 1442695040888963407) mod 2^64,
    uniform doubles from the top 53 bits."""

    def __init__(self, seed: int):
        self.state = seed & _LCG_MASK

    def uniform(self, lo: float = -1.0, hi: float = 1.0) -> float:
        self.state = (_LCG_MULT * self.state + _LCG_INC) & _LCG_MASK
        u = (self.state >> 11) / float(1 << 53)
        return lo + (hi - lo) * u


@dataclass
class RunSpec:
    """Resolved settings of one experiment run."""

    problem: str = "henon-heiles"
    orbit: str = "box"
    mu: float = 0.0075
    ecc: float = 0.6
    dim: int = 1
    scheme: str = "scheme1"
    lam: float = 0.5
    h: float = 0.02
    t_end: float = 1.0
    out: Optional[str] = None
    stride: int = 1
    avf_nodes: int = 4
    energy_ref: str = "global-initial"
    fallback: str = "use-half"
    p0: Optional[str] = None
    q0: Optional[str] = None


def _fmt(x: float) -> str:
    return repr(float(x))


def _steps_for(h: float, t_end: float) -> int:
    n = t_end / h
    n_round = round(n)
    if n_round < 1 or abs(n - n_round) > 0.5 * np.spacing(max(1.0, n)):
        raise ValueError(f"t_end={t_end} is not an integral multiple of h={h}")
    return int(n_round)


def _parse_vector(text: str, dim: int, name: str) -> np.ndarray:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != dim:
        raise ValueError(f"{name} needs {dim} comma-separated values")
    return np.array(parts)


def _initial_state(spec: RunSpec, sys: HamiltonianSystem) -> PhaseState:
    if spec.p0 is not None or spec.q0 is not None:
        if spec.p0 is None or spec.q0 is None:
            raise ValueError("--p0 and --q0 must be given together")
        return PhaseState(
            _parse_vector(spec.p0, sys.dim, "--p0"),
            _parse_vector(spec.q0, sys.dim, "--q0"),
        )
    if spec.problem == "henon-heiles":
        kind = {"box": OrbitKind.Box, "chaotic": OrbitKind.Chaotic}.get(spec.orbit)
        if kind is None:
            raise ValueError(f"unknown orbit {spec.orbit!r} (box or chaotic)")
        return henon_heiles_initial(kind)
    if spec.problem in ("kepler", "two-body"):
        return kepler_initial(spec.ecc)
    if spec.problem == "oscillator":
        return PhaseState(np.zeros(sys.dim), np.ones(sys.dim))
    if spec.problem == "free":
        return PhaseState(np.ones(sys.dim), np.zeros(sys.dim))
    raise ValueError(f"unknown problem {spec.problem!r}")


def _resolve_system(spec: RunSpec) -> HamiltonianSystem:
    return make_problem(spec.problem, mu=spec.mu, dim=spec.dim)


def _run_trajectory(spec: RunSpec, sys: HamiltonianSystem, s0: PhaseState) -> Trajectory:
    n_steps = _steps_for(spec.h, spec.t_end)
    scheme = SCHEME_NAMES.get(spec.scheme)
    if scheme is None:
        raise ValueError(
            f"unknown scheme {spec.scheme!r}; choose from {', '.join(SCHEME_NAMES)}"
        )
    if scheme in ("equip4", "equip5"):
        cfg = EquipConfig(
            base=SchemeId.Scheme1 if scheme == "equip4" else SchemeId.Scheme3,
            energy_ref=EnergyReference(spec.energy_ref),
            fallback=EquipFallback(spec.fallback),
        )
        return integrate_equip(sys, cfg, s0, spec.h, n_steps)
    cfg = SchemeConfig(
        scheme=scheme,
        lam=spec.lam,
        h=spec.h,
        avf_nodes=spec.avf_nodes,
    )
    return integrate(sys, cfg, s0, n_steps)


def _csv_header(dim: int, labels: Sequence[str]) -> str:
    cols = ["step", "t"]
    cols += [f"p{i+1}" for i in range(dim)]
    cols += [f"q{i+1}" for i in range(dim)]
    cols += ["H", "H_defect"]
    cols += list(labels)
    cols.append("lambda")
    return ",".join(cols)


def _write_rows(
    out: TextIO, traj: Trajectory, dim: int, labels: Sequence[str], stride: int, lam0: float
) -> int:
    rows = 0
    h0 = traj.energy[0]
    for n in range(len(traj.states)):
        if n % stride != 0:
            continue
        s = traj.states[n]
        lam = lam0 if n == 0 else traj.lambdas[n - 1]
        cells = [str(n), _fmt(traj.times[n])]
        cells += [_fmt(x) for x in s.p]
        cells += [_fmt(x) for x in s.q]
        cells += [_fmt(traj.energy[n]), _fmt(traj.energy[n] - h0)]
        cells += [_fmt(traj.invariants[label][n]) for label in labels]
        cells.append(_fmt(lam))
        out.write(",".join(cells) + "\n")
        rows += 1
    return rows


def _summaries(traj: Trajectory) -> Tuple[float, Dict[str, float]]:
    defect = float(np.max(np.abs(traj.energy - traj.energy[0])))
    inv = {
        label: float(np.max(np.abs(series - series[0])))
        for label, series in traj.invariants.items()
    }
    return defect, inv


def cmd_run(spec: RunSpec, json_out: bool = False) -> int:
    t_start = time.perf_counter()
    sys_ = _resolve_system(spec)
    s0 = _initial_state(spec, sys_)
    labels = [label for label, _ in sys_.quadratic_invariants]
    lam0 = 0.5 if spec.scheme in ("equip4", "equip5") else spec.lam

    partial: Optional[Trajectory] = None
    failure: Optional[IntegrationError] = None
    try:
        traj = _run_trajectory(spec, sys_, s0)
    except IntegrationError as err:
        traj, failure = err.partial, err

    rows = 0
    if spec.out:
        with open(spec.out, "w", encoding="utf-8") as fh:
            fh.write(_csv_header(sys_.dim, labels) + "\n")
            rows = _write_rows(fh, traj, sys_.dim, labels, spec.stride, lam0)
            if failure is not None:
                fh.write(f"FAILED,{failure.step_index},{failure}\n")

    defect, inv = _summaries(traj)
    wall = time.perf_counter() - t_start
    inv_text = " ".join(f"{k}_drift={v:.3e}" for k, v in inv.items())
    status = "FAILED" if failure is not None else "ok"
    print(
        f"{status} steps={traj.n_steps} rows={rows} "
        f"max_energy_defect={defect:.3e} {inv_text} wall={wall:.2f}s".rstrip()
    )
    if json_out:
        print(
            json.dumps(
                {
                    "spec": asdict(spec),
                    "max_energy_defect": defect,
                    "invariant_defects": inv,
                    "rows_written": rows,
                    "wall_seconds": wall,
                },
                sort_keys=True,
            )
        )
    if failure is not None:
        print(str(failure), file=sys.stderr)
        return 1
    return 0


def cmd_converge(
    spec: RunSpec, h0: float, levels: int, json_out: bool = False
) -> int:
    t_start = time.perf_counter()
    if levels < 2:
        raise ValueError("levels must be >= 2")
    sys_ = _resolve_system(spec)
    s0 = _initial_state(spec, sys_)
    scheme = SCHEME_NAMES.get(spec.scheme)
    if scheme is None:
        raise ValueError(f"unknown scheme {spec.scheme!r}")
    if scheme in ("equip4", "equip5"):
        cfg = EquipConfig(
            base=SchemeId.Scheme1 if scheme == "equip4" else SchemeId.Scheme3,
            energy_ref=EnergyReference(spec.energy_ref),
            fallback=EquipFallback(spec.fallback),
        )
    else:
        cfg = SchemeConfig(
            scheme=scheme, lam=spec.lam, h=h0, avf_nodes=spec.avf_nodes
        )
    rows = convergence_study(sys_, cfg, s0, h0, levels, spec.t_end)
    print(f"{'h':>12} {'error':>12} {'order':>7}")
    for row in rows:
        order = "" if row.order is None else f"{row.order:.2f}"
        print(f"{row.h:>12.6g} {row.error:>12.2E} {order:>7}")
    if spec.out:
        with open(spec.out, "w", encoding="utf-8") as fh:
            fh.write("h,error,order\n")
            for row in rows:
                order = "" if row.order is None else _fmt(row.order)
                fh.write(f"{_fmt(row.h)},{_fmt(row.error)},{order}\n")
    if json_out:
        print(
            json.dumps(
                {
                    "spec": asdict(spec),
                    "rows": [
                        {"h": r.h, "error": r.error, "order": r.order} for r in rows
                    ],
                    "wall_seconds": time.perf_counter() - t_start,
                },
                sort_keys=True,
            )
        )
    return 0


def _random_state(rng: _Lcg, spec: RunSpec, sys_: HamiltonianSystem) -> PhaseState:
    """Entries uniform in [-1, 1]; for the singular potentials q is
    redrawn until |q| >= 0.3 so every stencil point stays regular."""
    d = sys_.dim
    p = np.array([rng.uniform() for _ in range(d)])
    while True:
        q = np.array([rng.uniform() for _ in range(d)])
        if spec.problem not in ("kepler", "two-body") or float(q @ q) >= 0.09:
            return PhaseState(p, q)


def cmd_symcheck(
    spec: RunSpec, trials: int, seed: int, threshold: float, json_out: bool = False
) -> int:
    t_start = time.perf_counter()
    scheme = SCHEME_NAMES.get(spec.scheme)
    if scheme in ("equip4", "equip5") or scheme is None:
        raise ValueError("symcheck applies to the fixed-parameter schemes")
    sys_ = _resolve_system(spec)
    cfg = SchemeConfig(
        scheme=scheme, lam=spec.lam, h=spec.h, avf_nodes=spec.avf_nodes
    )
    rng = _Lcg(seed)
    worst = 0.0
    for _ in range(trials):
        s = _random_state(rng, spec, sys_)
        worst = max(worst, symplecticity_defect(cfg, sys_, s))
    verdict = "PASS" if worst <= threshold else "FAIL"
    print(
        f"{verdict} scheme={spec.scheme} lambda={spec.lam} problem={spec.problem} "
        f"trials={trials} max_defect={worst:.3e} threshold={threshold:.1e}"
    )
    if json_out:
        print(
            json.dumps(
                {
                    "spec": asdict(spec),
                    "max_defect": worst,
                    "threshold": threshold,
                    "trials": trials,
                    "seed": seed,
                    "verdict": verdict,
                    "wall_seconds": time.perf_counter() - t_start,
                },
                sort_keys=True,
            )
        )
    return 0 if verdict == "PASS" else 1


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", default=None, choices=PROBLEM_NAMES)
    p.add_argument("--orbit", default=None, choices=["box", "chaotic"])
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--ecc", type=float, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--scheme", default=None, choices=sorted(SCHEME_NAMES))
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--t-end", dest="t_end", type=float, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--avf-nodes", dest="avf_nodes", type=int, default=None)
    p.add_argument(
        "--energy-ref",
        dest="energy_ref",
        default=None,
        choices=["global-initial", "previous-step"],
    )
    p.add_argument("--fallback", default=None, choices=["use-half", "error"])
    p.add_argument("--p0", default=None)
    p.add_argument("--q0", default=None)
    p.add_argument("--spec", dest="spec_file", default=None,
                   help="JSON file with the same fields as the flags")
    p.add_argument("--json", action="store_true", dest="json_out")


def _build_spec(args: argparse.Namespace) -> RunSpec:
    spec = RunSpec()
    if args.spec_file:
        with open(args.spec_file, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        unknown = set(data) - set(spec.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown spec fields: {sorted(unknown)}")
        for key, value in data.items():
            setattr(spec, key, value)
    for key in spec.__dataclass_fields__:
        value = getattr(args, key, None)
        if value is not None:
            setattr(spec, key, value)
    if spec.stride < 1:
        raise ValueError("stride must be >= 1")
    return spec


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sympint",
        description="Structure-preserving integrator experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate and export CSV")
    _add_common(p_run)

    p_conv = sub.add_parser("converge", help="dyadic convergence table")
    _add_common(p_conv)
    p_conv.add_argument("--h0", type=float, default=0.02)
    p_conv.add_argument("--levels", type=int, default=5)

    p_sym = sub.add_parser("symcheck", help="random-state symplecticity check")
    _add_common(p_sym)
    p_sym.add_argument("--trials", type=int, default=20)
    p_sym.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_sym.add_argument("--threshold", type=float, default=1e-6)

    args = parser.parse_args(argv)
    try:
        spec = _build_spec(args)
        if args.command == "run":
            return cmd_run(spec, json_out=args.json_out)
        if args.command == "converge":
            return cmd_converge(spec, args.h0, args.levels, json_out=args.json_out)
        if args.command == "symcheck":
            return cmd_symcheck(
                spec, args.trials, args.seed, args.threshold, json_out=args.json_out
            )
        raise ValueError(f"unknown command {args.command!r}")
    except (ValueError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
