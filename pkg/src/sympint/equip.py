"""Energy-conserving parameterized steppers ("EQUIP" schemes).

Each step advances with one of the symplectic base maps (scheme 1 or
scheme 3) but re-solves the free parameter lambda so the chosen scalar
target — the energy by default — is conserved exactly:

    E(lambda) = H(step(lambda; p_n, q_n)) - H_ref = 0.

The scalar root is found by a warm-started secant iteration.  Probes
that leave the trust window or whose stage equations fail are bisected
toward 1/2 once; if the secant still fails, a deterministic bracketed
search over the trust window recovers the root nearest 1/2.

Rarely (isolated steps near a sign change of dE/dlambda) the equation
has no root inside the window at all — a conservation pocket.  Such a
span is split in half recursively, each half conserving against the
same reference, down to MAX_SPLIT_DEPTH; slivers still without a root
advance at lambda = 1/2, whose leftover defect shrinks like the cube of
the sliver size, so the step's end defect stays within tolerance.  Only
when even that fails does the configured fallback apply.  Bilinear
invariants p^T C q are conserved by the base maps for every lambda, so
they survive both the parameter search and the splitting.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .schemes import (
    IntegrationError,
    SchemeId,
    Trajectory,
    _make_trajectory,
    _scheme1_raw,
    _scheme3_raw,
)
from .solvers import NonConvergenceError, SecantConfig, SolverConfig
from .state import HamiltonianSystem, PhaseState

__all__ = [
    "EnergyReference",
    "EquipFallback",
    "EquipConfig",
    "EquipStepRecord",
    "energy_error",
    "step_equip",
    "integrate_equip",
]

#: Interior nodes scanned by the bracketed rescue search.
RESCUE_GRID = 31

#: Bisection budget for one rescue bracket.
RESCUE_BISECTIONS = 100

#: Recursion limit for splitting a rootless span (a conservation
#: pocket) into half-size conserving sub-steps.  An all-midpoint
#: composite of 2**d sub-steps leaves a defect of order
#: (pocket defect) / 4**d, so depth 8 turns an O(h^3) pocket defect
#: into ~1e-5 of itself.
MAX_SPLIT_DEPTH = 8


class EnergyReference(enum.Enum):
    """What the conserved target is measured against."""

    GlobalInitial = "global-initial"
    PreviousStep = "previous-step"


class EquipFallback(enum.Enum):
    """Behavior when a step's end defect still exceeds tolerance after
    the parameter search and the split rescue: UseHalf accepts the step
    and records the defect, Error raises NonConvergenceError."""

    UseHalf = "use-half"
    Error = "error"


@dataclass(frozen=True)
class EquipConfig:
    """Settings for the energy-conserving steppers.

    `base` selects the symplectic family: SchemeId.Scheme1 (order 1) or
    SchemeId.Scheme3 (order 2).  `secant.x0`/`x1` are ignored — the
    iteration is warm-started from the previous accepted lambda (1/2 on
    the first step) with second point lambda0 + h^2.  `secant.f_tol` is
    interpreted relative to max(1, |target at the reference state|).
    `target` replaces the Hamiltonian as the conserved scalar when set.
    `trust_window` bounds the lambda probes; the default (0, 1) keeps
    every accepted parameter strictly between the explicit limits.
    """

    base: SchemeId = SchemeId.Scheme1
    stage_solver: SolverConfig = field(default_factory=SolverConfig)
    secant: SecantConfig = field(
        default_factory=lambda: SecantConfig(x0=0.5, x1=0.75, f_tol=1e-12)
    )
    energy_ref: EnergyReference = EnergyReference.GlobalInitial
    fallback: EquipFallback = EquipFallback.UseHalf
    target: Optional[Callable[[np.ndarray, np.ndarray], float]] = None
    trust_window: Tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.base not in (SchemeId.Scheme1, SchemeId.Scheme3):
            raise ValueError("base must be Scheme1 or Scheme3")
        lo, hi = self.trust_window
        if not lo < 0.5 < hi:
            raise ValueError("trust_window must contain 1/2")


@dataclass(frozen=True)
class EquipStepRecord:
    """Outcome of one parameter search.

    `lam` is the accepted parameter; when a conservation pocket forced
    the step to be split, it is the last sub-span's parameter (the one
    that fixed the end state's energy).  `secant_iters` counts all
    E(lambda) evaluations spent on the step.  `fell_back` marks a step
    whose end defect exceeds the tolerance despite the rescue.
    """

    lam: float
    secant_iters: int
    energy_defect: float
    fell_back: bool


class _ProbeFailed(RuntimeError):
    """A lambda probe could not be evaluated (stage failure / out of window)."""


def _base_step_raw(sys, p, q, h, lam, base: SchemeId, solver: SolverConfig):
    if base is SchemeId.Scheme3:
        return _scheme3_raw(sys, p, q, h, lam, solver)
    return _scheme1_raw(sys, p, q, h, lam, solver)


def energy_error(
    sys: HamiltonianSystem,
    s_n: PhaseState,
    lam: float,
    h: float,
    base: SchemeId = SchemeId.Scheme1,
    stage_solver: Optional[SolverConfig] = None,
    h_ref: Optional[float] = None,
) -> float:
    """E(lambda, h) = H(base step at lambda) - H_ref.

    `h_ref` defaults to the energy at s_n.  Scales like h^2 for fixed
    lambda != 1/2 and like h^3 at lambda = 1/2.
    """
    solver = stage_solver or SolverConfig()
    p1, q1 = _base_step_raw(sys, s_n.p, s_n.q, h, lam, base, solver)
    ref = float(sys.energy(s_n.p, s_n.q)) if h_ref is None else float(h_ref)
    return float(sys.energy(p1, q1)) - ref


class _LambdaSearch:
    """Root search for one step; counts evaluations and caches the step."""

    def __init__(self, sys, p, q, h, cfg: EquipConfig, ref: float, f_tol: float):
        self.sys = sys
        self.p, self.q, self.h = p, q, h
        self.cfg = cfg
        self.ref = ref
        self.f_tol = f_tol
        self.evals = 0
        self.best: Tuple[float, float, Optional[tuple]] = (math.inf, 0.5, None)

    def _target(self, p, q) -> float:
        if self.cfg.target is not None:
            return float(self.cfg.target(p, q))
        return float(self.sys.energy(p, q))

    def _raw_probe(self, lam: float) -> Tuple[float, tuple]:
        """Evaluate E(lam); raises _ProbeFailed outside the window or on
        stage failure."""
        lo, hi = self.cfg.trust_window
        if not (lo < lam < hi) or not np.isfinite(lam):
            raise _ProbeFailed(f"lambda {lam} outside trust window")
        self.evals += 1
        try:
            p1, q1 = _base_step_raw(
                self.sys, self.p, self.q, self.h, lam, self.cfg.base,
                self.cfg.stage_solver,
            )
        except (NonConvergenceError, ValueError) as err:
            raise _ProbeFailed(f"stage equations failed at lambda {lam}") from err
        val = self._target(p1, q1) - self.ref
        if not np.isfinite(val):
            raise _ProbeFailed(f"target non-finite at lambda {lam}")
        if abs(val) < self.best[0]:
            self.best = (abs(val), lam, (p1, q1))
        return val, (p1, q1)

    def _probe(self, lam: float) -> Tuple[float, float, tuple]:
        """Probe with the retry rule: a failed probe is bisected toward
        1/2 once before the failure propagates."""
        try:
            val, step = self._raw_probe(lam)
            return lam, val, step
        except _ProbeFailed:
            retry = 0.5 * (lam + 0.5)
            val, step = self._raw_probe(retry)
            return retry, val, step

    def secant(self, lam0: float) -> Optional[Tuple[float, tuple]]:
        """Warm-started secant iteration; None when it fails."""
        cfg = self.cfg.secant
        try:
            x0, f0, step0 = self._probe(lam0)
            if abs(f0) <= self.f_tol:
                return x0, step0
            x1, f1, step1 = self._probe(x0 + self.h * self.h)
            if abs(f1) <= self.f_tol:
                return x1, step1
            for _ in range(cfg.max_iter):
                denom = f1 - f0
                if denom == 0.0 or not np.isfinite(denom):
                    return None
                x2 = x1 - f1 * (x1 - x0) / denom
                x2, f2, step2 = self._probe(x2)
                if abs(f2) <= self.f_tol:
                    return x2, step2
                if abs(x2 - x1) <= cfg.x_tol:
                    return None
                x0, f0, x1, f1 = x1, f1, x2, f2
        except _ProbeFailed:
            return None
        return None

    def rescue(self) -> Optional[Tuple[float, tuple]]:
        """Deterministic bracketed search over the trust window.

        Scans a fixed grid, prefers any conserving node nearest 1/2,
        else bisects the sign-change bracket whose midpoint lies nearest
        1/2.  Returns None when the window shows no usable bracket.
        """
        lo, hi = self.cfg.trust_window
        xs = [lo + (hi - lo) * j / (RESCUE_GRID + 1) for j in range(1, RESCUE_GRID + 1)]
        vals: List[Optional[float]] = []
        steps: List[Optional[tuple]] = []
        for x in xs:
            try:
                v, st = self._raw_probe(x)
                vals.append(v)
                steps.append(st)
            except _ProbeFailed:
                vals.append(None)
                steps.append(None)
        hits = [
            (abs(x - 0.5), x, steps[i])
            for i, x in enumerate(xs)
            if vals[i] is not None and abs(vals[i]) <= self.f_tol
        ]
        if hits:
            _, x, st = min(hits)
            return x, st
        brackets = [
            (abs(0.5 * (xs[i] + xs[i + 1]) - 0.5), xs[i], xs[i + 1], vals[i], vals[i + 1])
            for i in range(len(xs) - 1)
            if vals[i] is not None
            and vals[i + 1] is not None
            and np.sign(vals[i]) != np.sign(vals[i + 1])
        ]
        for _, a, b, fa, fb in sorted(brackets):
            try:
                for _ in range(RESCUE_BISECTIONS):
                    mid = 0.5 * (a + b)
                    fm, st = self._raw_probe(mid)
                    if abs(fm) <= self.f_tol:
                        return mid, st
                    if np.sign(fm) == np.sign(fa):
                        a, fa = mid, fm
                    else:
                        b, fb = mid, fm
                    if abs(b - a) <= 1e-15:
                        break
            except _ProbeFailed:
                continue
        return None

def _try_root(
    sys, p, q, h, cfg: EquipConfig, ref: float, f_tol: float, lam0: float
) -> Tuple[Optional[float], Optional[tuple], int]:
    """One secant-plus-rescue attempt over a single span.

    Returns ``(lam, (p1, q1), evals)``, with ``lam`` None when the trust
    window holds no root of the conservation equation.
    """
    search = _LambdaSearch(sys, p, q, h, cfg, ref, f_tol)
    found = search.secant(lam0)
    if found is None:
        found = search.rescue()
    if found is None:
        return None, None, search.evals
    lam, step = found
    return lam, step, search.evals


def _conserving_span(
    sys, p, q, span, cfg: EquipConfig, ref: float, f_tol: float,
    lam0: float, depth: int,
) -> Tuple[np.ndarray, np.ndarray, float, int]:
    """Advance ``(p, q)`` by ``span``, conserving the target wherever
    the conservation equation has a root.

    A rootless span (a conservation pocket) is split in half and each
    half is solved against the *same* reference, recursively down to
    MAX_SPLIT_DEPTH; a sliver still without a root advances at
    lambda = 1/2, leaving a defect that shrinks like the cube of the
    sliver size.  Returns ``(p1, q1, last_lam, evals)``; ``last_lam``
    belongs to the final sub-span, which fixed the end state's energy.
    """
    lam, step, evals = _try_root(sys, p, q, span, cfg, ref, f_tol, lam0)
    if lam is not None:
        p1, q1 = step
        return p1, q1, lam, evals
    if depth >= MAX_SPLIT_DEPTH:
        p1, q1 = _base_step_raw(sys, p, q, span, 0.5, cfg.base, cfg.stage_solver)
        return p1, q1, 0.5, evals + 1
    half = 0.5 * span
    pa, qa, lam_a, ev_a = _conserving_span(
        sys, p, q, half, cfg, ref, f_tol, lam0, depth + 1
    )
    pb, qb, lam_b, ev_b = _conserving_span(
        sys, pa, qa, half, cfg, ref, f_tol, lam_a, depth + 1
    )
    return pb, qb, lam_b, evals + ev_a + ev_b


def _solve_step(
    sys, p, q, h, cfg: EquipConfig, ref: float, f_tol: float, lam0: float
) -> Tuple[np.ndarray, np.ndarray, EquipStepRecord]:
    p1, q1, lam, evals = _conserving_span(sys, p, q, h, cfg, ref, f_tol, lam0, 0)
    if cfg.target is not None:
        end = float(cfg.target(p1, q1))
    else:
        end = float(sys.energy(p1, q1))
    defect = abs(end - ref)
    if defect <= f_tol:
        return p1, q1, EquipStepRecord(
            lam=lam, secant_iters=evals, energy_defect=defect, fell_back=False
        )
    if cfg.fallback is EquipFallback.Error:
        raise NonConvergenceError(
            "no conserving lambda found in the trust window", lam, defect, evals
        )
    return p1, q1, EquipStepRecord(
        lam=lam, secant_iters=evals, energy_defect=defect, fell_back=True
    )


def _effective_f_tol(cfg: EquipConfig, ref: float) -> float:
    return cfg.secant.f_tol * max(1.0, abs(ref))


def step_equip(
    sys: HamiltonianSystem,
    s_n: PhaseState,
    h: float,
    cfg: EquipConfig,
    lam0: float = 0.5,
    h_ref: Optional[float] = None,
) -> Tuple[PhaseState, EquipStepRecord]:
    """One energy-conserving step from s_n.

    `lam0` is the warm start (the previous accepted lambda inside a
    trajectory); `h_ref` overrides the conserved target's reference
    value, which defaults to the target at s_n.
    """
    if s_n.dim != sys.dim:
        raise ValueError(f"state dimension {s_n.dim} != system dimension {sys.dim}")
    if cfg.target is not None:
        ref = float(cfg.target(s_n.p, s_n.q)) if h_ref is None else float(h_ref)
    else:
        ref = float(sys.energy(s_n.p, s_n.q)) if h_ref is None else float(h_ref)
    p1, q1, record = _solve_step(
        sys, s_n.p, s_n.q, h, cfg, ref, _effective_f_tol(cfg, ref), lam0
    )
    return PhaseState(p1, q1), record


def integrate_equip(
    sys: HamiltonianSystem,
    cfg: EquipConfig,
    s0: PhaseState,
    h: float,
    n_steps: int,
) -> Trajectory:
    """Advance s0 by n_steps energy-conserving steps.

    The trajectory's `lambdas` holds the accepted lambda of every step
    (for a pocket-split step, the last sub-span's).  A step whose defect
    stays above tolerance raises when cfg.fallback is Error; with
    UseHalf it is accepted and the energy series shows the defect.
    """
    if s0.dim != sys.dim:
        raise ValueError(f"state dimension {s0.dim} != system dimension {sys.dim}")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")

    def target_at(p, q) -> float:
        if cfg.target is not None:
            return float(cfg.target(p, q))
        return float(sys.energy(p, q))

    ref0 = target_at(s0.p, s0.q)
    f_tol = _effective_f_tol(cfg, ref0)

    times: List[float] = [0.0]
    states: List[PhaseState] = [s0]
    energies: List[float] = [float(sys.energy(s0.p, s0.q))]
    invariants = {
        label: [float(s0.p @ C @ s0.q)] for label, C in sys.quadratic_invariants
    }
    lambdas: List[float] = []

    p, q = s0.p, s0.q
    lam_prev = 0.5
    for n in range(1, n_steps + 1):
        ref = ref0 if cfg.energy_ref is EnergyReference.GlobalInitial else target_at(p, q)
        try:
            p, q, record = _solve_step(sys, p, q, h, cfg, ref, f_tol, lam_prev)
        except NonConvergenceError as err:
            partial = _make_trajectory(times, states, energies, invariants, lambdas)
            raise IntegrationError(str(err), n, partial) from err
        lam_prev = record.lam
        state = PhaseState(p, q)
        times.append(n * h)
        states.append(state)
        energies.append(float(sys.energy(p, q)))
        for label, C in sys.quadratic_invariants:
            invariants[label].append(float(p @ C @ q))
        lambdas.append(record.lam)
    return _make_trajectory(times, states, energies, invariants, lambdas)
