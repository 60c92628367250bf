"""Measurement harness: symplecticity defects, convergence orders,
invariant drift, and lambda-sequence statistics.

The convergence convention is self-comparison on dyadic step ladders:
Error_h = ||y_h(t_end) - y_{h/2}(t_end)||_inf and
Order = log2(Error_h / Error_{h/2}), evaluated at the final time only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from .equip import EquipConfig, integrate_equip
from .schemes import (
    SchemeConfig,
    SchemeId,
    Trajectory,
    integrate,
    step_avf,
    step_composed4,
    step_nystrom1,
    step_scheme1,
    step_scheme1_adjoint,
    step_scheme2,
    step_scheme3,
)
from .state import HamiltonianSystem, PhaseState

__all__ = [
    "ConvergenceRow",
    "DriftReport",
    "LambdaSummary",
    "symplecticity_defect",
    "convergence_study",
    "invariant_drift",
    "lambda_distribution",
]

#: Central-difference step scale for the one-step Jacobian.
JACOBIAN_FD_STEP = 1e-6


@dataclass(frozen=True)
class ConvergenceRow:
    """One ladder entry: step size, self-comparison error, fitted order."""

    h: float
    error: float
    order: Optional[float] = None


@dataclass(frozen=True)
class DriftReport:
    """Signed defect series I(state_n) - I(state_0) of one invariant."""

    label: str
    series: np.ndarray
    max_abs: float
    final: float


@dataclass(frozen=True)
class LambdaSummary:
    """Summary statistics of a trajectory's per-step lambda sequence."""

    min: float
    max: float
    mean: float
    max_dev: float  # max |lambda_n - 1/2|


def _single_step(cfg: SchemeConfig, sys: HamiltonianSystem, s: PhaseState) -> PhaseState:
    if cfg.scheme is SchemeId.Scheme1:
        return step_scheme1(sys, s, cfg.h, cfg.lam, cfg.stage_solver)
    if cfg.scheme is SchemeId.Scheme1Adjoint:
        return step_scheme1_adjoint(sys, s, cfg.h, cfg.lam, cfg.stage_solver)
    if cfg.scheme is SchemeId.Scheme2:
        return step_scheme2(sys, s, cfg.h, cfg.lam, cfg.stage_solver)
    if cfg.scheme is SchemeId.Scheme3:
        return step_scheme3(sys, s, cfg.h, cfg.lam, cfg.stage_solver)
    if cfg.scheme is SchemeId.Composed4:
        return step_composed4(sys, s, cfg.h, cfg.lam, cfg.stage_solver)
    if cfg.scheme is SchemeId.Nystrom1:
        return step_nystrom1(sys, s, cfg.h, cfg.lam, cfg.stage_solver)
    if cfg.scheme is SchemeId.AVF:
        return step_avf(sys, s, cfg.h, cfg.avf_nodes, cfg.stage_solver)
    raise ValueError(f"unknown scheme {cfg.scheme!r}")


def symplecticity_defect(
    cfg: SchemeConfig, sys: HamiltonianSystem, s: PhaseState
) -> float:
    """Max-entry norm of M^T J M - J for the one-step map's Jacobian M.

    M is built by central differences of the full step map with step
    1e-6 * max(1, |x_i|) per coordinate; J = [[0, I], [-I, 0]].  Zero in
    exact arithmetic for the symplectic family; the AVF stepper serves
    as the negative control.
    """
    d = sys.dim
    x0 = s.as_vector()
    M = np.empty((2 * d, 2 * d))
    for j in range(2 * d):
        eps = JACOBIAN_FD_STEP * max(1.0, abs(x0[j]))
        xp = x0.copy()
        xm = x0.copy()
        xp[j] += eps
        xm[j] -= eps
        sp = _single_step(cfg, sys, PhaseState.from_vector(xp))
        sm = _single_step(cfg, sys, PhaseState.from_vector(xm))
        M[:, j] = (sp.as_vector() - sm.as_vector()) / (2.0 * eps)
    J = np.block(
        [[np.zeros((d, d)), np.eye(d)], [-np.eye(d), np.zeros((d, d))]]
    )
    return float(np.max(np.abs(M.T @ J @ M - J)))


def _steps_for(h: float, t_end: float) -> int:
    n = t_end / h
    n_round = round(n)
    if n_round < 1 or abs(n - n_round) > 0.5 * np.spacing(max(1.0, n)):
        raise ValueError(f"t_end={t_end} is not an integral multiple of h={h}")
    return int(n_round)


def _final_state(
    sys: HamiltonianSystem,
    cfg: Union[SchemeConfig, EquipConfig],
    s0: PhaseState,
    h: float,
    n_steps: int,
) -> np.ndarray:
    if isinstance(cfg, EquipConfig):
        traj = integrate_equip(sys, cfg, s0, h, n_steps)
    else:
        traj = integrate(sys, _with_h(cfg, h), s0, n_steps)
    return traj.states[-1].as_vector()


def _with_h(cfg: SchemeConfig, h: float) -> SchemeConfig:
    return SchemeConfig(
        scheme=cfg.scheme,
        lam=cfg.lam,
        h=h,
        stage_solver=cfg.stage_solver,
        avf_nodes=cfg.avf_nodes,
    )


def convergence_study(
    sys: HamiltonianSystem,
    cfg: Union[SchemeConfig, EquipConfig],
    s0: PhaseState,
    h0: float,
    levels: int,
    t_end: float,
) -> List[ConvergenceRow]:
    """Self-comparison convergence ladder h0, h0/2, ..., h0/2^(levels-1).

    Runs the scheme once per level and reports, for each level except
    the finest, Error_h = ||y_h(t_end) - y_{h/2}(t_end)||_inf together
    with the dyadic order estimate (present from the second row on).
    `cfg` may be a fixed-lambda SchemeConfig or an EquipConfig.
    """
    if levels < 2:
        raise ValueError("levels must be >= 2")
    finals = []
    for k in range(levels):
        h = h0 / 2**k
        finals.append(_final_state(sys, cfg, s0, h, _steps_for(h, t_end)))
    rows: List[ConvergenceRow] = []
    prev_error: Optional[float] = None
    for k in range(levels - 1):
        error = float(np.max(np.abs(finals[k] - finals[k + 1])))
        order = None if prev_error is None else math.log2(prev_error / error)
        rows.append(ConvergenceRow(h=h0 / 2**k, error=error, order=order))
        prev_error = error
    return rows


def invariant_drift(traj: Trajectory, which: str = "energy") -> DriftReport:
    """Signed drift series of the energy or a labeled invariant."""
    if which == "energy":
        values = traj.energy
    elif which in traj.invariants:
        values = traj.invariants[which]
    else:
        known = ", ".join(["energy", *traj.invariants])
        raise ValueError(f"unknown invariant {which!r}; trajectory has: {known}")
    series = np.asarray(values, dtype=float) - float(values[0])
    return DriftReport(
        label=which,
        series=series,
        max_abs=float(np.max(np.abs(series))),
        final=float(series[-1]),
    )


def lambda_distribution(traj: Trajectory) -> LambdaSummary:
    """Min/max/mean and worst deviation from 1/2 of the lambda sequence."""
    lams = np.asarray(traj.lambdas, dtype=float)
    if lams.size == 0:
        raise ValueError("trajectory carries no lambda data")
    return LambdaSummary(
        min=float(lams.min()),
        max=float(lams.max()),
        mean=float(lams.mean()),
        max_dev=float(np.max(np.abs(lams - 0.5))),
    )
