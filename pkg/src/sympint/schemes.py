"""One-step maps for canonical Hamiltonian systems and a trajectory driver.

The core family is a one-parameter symplectic scheme (here "scheme 1"):

    p1 = p - h H_q(u, v),   q1 = q + h H_p(u, v),
    u  = lam p1 + (1 - lam) p,   v = lam q + (1 - lam) q1,

of order 1 for lam != 1/2 and order 2 at lam = 1/2 (implicit midpoint).
On top of it sit the adjoint map (lam -> 1 - lam), a second-order
corrected variant ("scheme 2"), a symmetric composition ("scheme 3"),
an order-4 triple-jump composition, a one-stage Nystrom form for
separable systems, and the energy-conserving AVF baseline.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .solvers import NonConvergenceError, SolverConfig, stage_solve
from .state import HamiltonianSystem, PhaseState, fd_gradient, system_hessians

__all__ = [
    "SchemeId",
    "SchemeConfig",
    "Trajectory",
    "IntegrationError",
    "step_scheme1",
    "step_scheme1_adjoint",
    "step_scheme2",
    "step_scheme3",
    "step_composed4",
    "step_nystrom1",
    "step_avf",
    "integrate",
]

#: Triple-jump composition weights: gamma1 + gamma2 + gamma3 = 1 and
#: gamma1^3 + gamma2^3 + gamma3^3 = 0, giving order 4 from a symmetric
#: order-2 base method.
TRIPLE_JUMP_GAMMA1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
TRIPLE_JUMP_GAMMA2 = 1.0 - 2.0 * TRIPLE_JUMP_GAMMA1


class SchemeId(enum.Enum):
    Scheme1 = "scheme1"
    Scheme1Adjoint = "scheme1-adjoint"
    Scheme2 = "scheme2"
    Scheme3 = "scheme3"
    Composed4 = "composed4"
    Nystrom1 = "nystrom1"
    AVF = "avf"


@dataclass(frozen=True)
class SchemeConfig:
    """Everything needed to advance a system with one bundled scheme."""

    scheme: SchemeId
    lam: float = 0.5
    h: float = 0.01
    stage_solver: SolverConfig = field(default_factory=SolverConfig)
    avf_nodes: int = 4

    def __post_init__(self):
        if not np.isfinite(self.h) or self.h == 0.0:
            raise ValueError("h must be finite and nonzero")
        if not np.isfinite(self.lam):
            raise ValueError("lambda must be finite")
        if self.avf_nodes < 1:
            raise ValueError("avf_nodes must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    """A completed run: states plus per-sample energy/invariant series.

    All series have length n_steps + 1 except `lambdas`, which records
    the lambda used for each of the n_steps transitions.
    """

    times: np.ndarray
    states: Tuple[PhaseState, ...]
    energy: np.ndarray
    invariants: Dict[str, np.ndarray]
    lambdas: np.ndarray

    @property
    def n_steps(self) -> int:
        return len(self.states) - 1


class IntegrationError(RuntimeError):
    """A step failed mid-run; carries the partial trajectory built so far."""

    def __init__(self, message: str, step_index: int, partial: Trajectory):
        super().__init__(f"{message} (at step {step_index})")
        self.step_index = int(step_index)
        self.partial = partial


# ---------------------------------------------------------------------------
# gradient plumbing


def _grad_funcs(sys: HamiltonianSystem):
    """(H_p, H_q) closures on raw arrays, analytic when available."""
    if sys.grad_p is not None:
        fp = lambda p, q: np.asarray(sys.grad_p(p, q), dtype=float)
    else:
        fp = lambda p, q: fd_gradient(lambda x: sys.energy(x, q), p)
    if sys.grad_q is not None:
        fq = lambda p, q: np.asarray(sys.grad_q(p, q), dtype=float)
    else:
        fq = lambda p, q: fd_gradient(lambda x: sys.energy(p, x), q)
    return fp, fq


def _precheck(sys: HamiltonianSystem, s: PhaseState) -> None:
    if s.dim != sys.dim:
        raise ValueError(f"state dimension {s.dim} != system dimension {sys.dim}")


# ---------------------------------------------------------------------------
# scheme 1 family


def _scheme1_raw(
    sys: HamiltonianSystem,
    p: np.ndarray,
    q: np.ndarray,
    h: float,
    lam: float,
    solver: SolverConfig,
) -> Tuple[np.ndarray, np.ndarray]:
    """One step in stage-increment form: iterate on (k, l) with
    k = -H_q(p + lam h k, q + (1-lam) h l), l = +H_p(same point)."""
    fp, fq = _grad_funcs(sys)
    d = p.size
    k0 = -fq(p, q)
    l0 = fp(p, q)

    def g(x: np.ndarray) -> np.ndarray:
        u = p + lam * h * x[:d]
        v = q + (1.0 - lam) * h * x[d:]
        return np.concatenate([-fq(u, v), fp(u, v)])

    x = stage_solve(g, np.concatenate([k0, l0]), solver)
    return p + h * x[:d], q + h * x[d:]


def step_scheme1(
    sys: HamiltonianSystem,
    s: PhaseState,
    h: float,
    lam: float,
    solver: Optional[SolverConfig] = None,
) -> PhaseState:
    """One step of the one-parameter map (order 1; order 2 at lam=1/2)."""
    _precheck(sys, s)
    p1, q1 = _scheme1_raw(sys, s.p, s.q, h, lam, solver or SolverConfig())
    return PhaseState(p1, q1)


def step_scheme1_adjoint(
    sys: HamiltonianSystem,
    s: PhaseState,
    h: float,
    lam: float,
    solver: Optional[SolverConfig] = None,
) -> PhaseState:
    """Adjoint of the base map: identical to scheme 1 with lam -> 1 - lam."""
    return step_scheme1(sys, s, h, 1.0 - lam, solver)


# ---------------------------------------------------------------------------
# scheme 2: second-order corrected variant


def _scheme2_raw(
    sys: HamiltonianSystem,
    p: np.ndarray,
    q: np.ndarray,
    h: float,
    lam: float,
    solver: SolverConfig,
) -> Tuple[np.ndarray, np.ndarray]:
    fp, fq = _grad_funcs(sys)
    d = p.size
    c = (lam - 0.5) * h * h

    def g(x: np.ndarray) -> np.ndarray:
        p1, q1 = x[:d], x[d:]
        u = lam * p1 + (1.0 - lam) * p
        v = lam * q + (1.0 - lam) * q1
        h_p = fp(u, v)
        h_q = fq(u, v)
        if c != 0.0:
            h_pp, h_pq, h_qq = system_hessians(sys, u, v)
            corr_p = h_qq @ h_p + h_pq.T @ h_q
            corr_q = h_pp @ h_q + h_pq @ h_p
        else:
            corr_p = corr_q = 0.0
        return np.concatenate(
            [p - h * h_q - c * corr_p, q + h * h_p + c * corr_q]
        )

    x0 = np.concatenate([p - h * fq(p, q), q + h * fp(p, q)])
    x = stage_solve(g, x0, solver)
    return x[:d], x[d:]


def step_scheme2(
    sys: HamiltonianSystem,
    s: PhaseState,
    h: float,
    lam: float,
    solver: Optional[SolverConfig] = None,
) -> PhaseState:
    """One step of the h^2-corrected map (order 2 for every lam).

    The update of scheme 1 is augmented by the correction terms
    -(lam-1/2) h^2 (H_qq H_p + H_pq^T H_q) on p and
    +(lam-1/2) h^2 (H_pp H_q + H_pq H_p) on q, all evaluated at the
    mixed point (u, v).  Hessians come from the system when declared,
    else from central finite differences.
    """
    _precheck(sys, s)
    p1, q1 = _scheme2_raw(sys, s.p, s.q, h, lam, solver or SolverConfig())
    return PhaseState(p1, q1)


# ---------------------------------------------------------------------------
# compositions


def _scheme3_raw(sys, p, q, h, lam, solver):
    """Half-step at 1-lam followed by half-step at lam (symmetric map)."""
    try:
        p, q = _scheme1_raw(sys, p, q, 0.5 * h, 1.0 - lam, solver)
    except NonConvergenceError as err:
        raise NonConvergenceError(
            f"first half-step failed: {err}", err.best_x, err.best_residual, err.iterations
        ) from err
    try:
        return _scheme1_raw(sys, p, q, 0.5 * h, lam, solver)
    except NonConvergenceError as err:
        raise NonConvergenceError(
            f"second half-step failed: {err}", err.best_x, err.best_residual, err.iterations
        ) from err


def step_scheme3(
    sys: HamiltonianSystem,
    s: PhaseState,
    h: float,
    lam: float,
    solver: Optional[SolverConfig] = None,
) -> PhaseState:
    """One step of the symmetric composition (order 2 for every lam)."""
    _precheck(sys, s)
    p1, q1 = _scheme3_raw(sys, s.p, s.q, h, lam, solver or SolverConfig())
    return PhaseState(p1, q1)


def _composed4_raw(sys, p, q, h, lam, solver):
    for gamma in (TRIPLE_JUMP_GAMMA1, TRIPLE_JUMP_GAMMA2, TRIPLE_JUMP_GAMMA1):
        p, q = _scheme3_raw(sys, p, q, gamma * h, lam, solver)
    return p, q


def step_composed4(
    sys: HamiltonianSystem,
    s: PhaseState,
    h: float,
    lam: float,
    solver: Optional[SolverConfig] = None,
) -> PhaseState:
    """Triple-jump composition of the symmetric map (order 4)."""
    _precheck(sys, s)
    p1, q1 = _composed4_raw(sys, s.p, s.q, h, lam, solver or SolverConfig())
    return PhaseState(p1, q1)


# ---------------------------------------------------------------------------
# Nystrom form for separable systems


def step_nystrom1(
    sys: HamiltonianSystem,
    s: PhaseState,
    h: float,
    lam: float,
    solver: Optional[SolverConfig] = None,
) -> PhaseState:
    """One-stage Nystrom step for H = p^T M^-1 p / 2 + U(q).

    The state carries velocity semantics: s.p is qdot.  Solves
    k1 = -M^-1 U_q(q + (1-lam) h qdot + lam (1-lam) h^2 k1) and returns
    q1 = q + h qdot + lam h^2 k1,  qdot1 = qdot + h k1.  The stage is
    explicit (a single force evaluation) exactly when lam is 0 or 1.
    """
    _precheck(sys, s)
    if sys.separable is None:
        raise ValueError("nystrom stepper requires a separable system")
    sep = sys.separable
    mass = np.asarray(sep.mass, dtype=float)
    qdot, q = s.p, s.q

    def accel(pos: np.ndarray) -> np.ndarray:
        force = -np.asarray(sep.grad_potential(pos), dtype=float)
        return np.linalg.solve(mass, force)

    base = q + (1.0 - lam) * h * qdot
    coeff = lam * (1.0 - lam) * h * h
    if coeff == 0.0:
        k1 = accel(base)
    else:
        k1 = stage_solve(
            lambda k: accel(base + coeff * k), accel(base), solver or SolverConfig()
        )
    q1 = q + h * qdot + lam * h * h * k1
    qdot1 = qdot + h * k1
    return PhaseState(qdot1, q1)


# ---------------------------------------------------------------------------
# AVF baseline


def _avf_quadrature(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    return (x + 1.0) / 2.0, w / 2.0


def _avf_raw(sys, p, q, h, nodes, solver):
    fp, fq = _grad_funcs(sys)
    d = p.size
    xi, wt = _avf_quadrature(nodes)

    def g(x: np.ndarray) -> np.ndarray:
        p1, q1 = x[:d], x[d:]
        avg_p = np.zeros(d)
        avg_q = np.zeros(d)
        for s_, w_ in zip(xi, wt):
            pm = (1.0 - s_) * p + s_ * p1
            qm = (1.0 - s_) * q + s_ * q1
            avg_p += w_ * fp(pm, qm)
            avg_q += w_ * fq(pm, qm)
        return np.concatenate([p - h * avg_q, q + h * avg_p])

    x0 = np.concatenate([p - h * fq(p, q), q + h * fp(p, q)])
    x = stage_solve(g, x0, solver)
    return x[:d], x[d:]


def step_avf(
    sys: HamiltonianSystem,
    s: PhaseState,
    h: float,
    nodes: int = 4,
    solver: Optional[SolverConfig] = None,
) -> PhaseState:
    """One average-vector-field step (energy-conserving, order 2).

    Replaces the gradients by their average along the straight line
    between consecutive states, with the line integrals approximated by
    `nodes`-point Gauss-Legendre quadrature on [0, 1].  Conserves the
    energy exactly (up to quadrature) but is not symplectic.
    """
    _precheck(sys, s)
    if nodes < 1:
        raise ValueError("nodes must be >= 1")
    p1, q1 = _avf_raw(sys, s.p, s.q, h, nodes, solver or SolverConfig())
    return PhaseState(p1, q1)


# ---------------------------------------------------------------------------
# trajectory driver


def _nystrom_momentum(sys: HamiltonianSystem, state: PhaseState) -> np.ndarray:
    return np.asarray(sys.separable.mass, dtype=float) @ state.p


def _observe(
    sys: HamiltonianSystem, state: PhaseState, velocity_semantics: bool
) -> Tuple[float, Dict[str, float]]:
    p = _nystrom_momentum(sys, state) if velocity_semantics else state.p
    energy = float(sys.energy(p, state.q))
    inv = {
        label: float(p @ C @ state.q) for label, C in sys.quadratic_invariants
    }
    return energy, inv


def _make_trajectory(times, states, energies, invariants, lambdas) -> Trajectory:
    inv_arrays = {k: np.asarray(v, dtype=float) for k, v in invariants.items()}
    return Trajectory(
        times=np.asarray(times, dtype=float),
        states=tuple(states),
        energy=np.asarray(energies, dtype=float),
        invariants=inv_arrays,
        lambdas=np.asarray(lambdas, dtype=float),
    )


def integrate(
    sys: HamiltonianSystem,
    cfg: SchemeConfig,
    s0: PhaseState,
    n_steps: int,
) -> Trajectory:
    """Advance s0 by n_steps fixed-size steps of the configured scheme.

    Records time, state, energy, every declared quadratic invariant and
    the per-step lambda.  On a stage-solver failure the partial
    trajectory is attached to the raised `IntegrationError`.
    """
    _precheck(sys, s0)
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    velocity = cfg.scheme is SchemeId.Nystrom1
    if velocity and sys.separable is None:
        raise ValueError("nystrom stepper requires a separable system")

    def stepper(state: PhaseState) -> PhaseState:
        if cfg.scheme is SchemeId.Scheme1:
            return step_scheme1(sys, state, cfg.h, cfg.lam, cfg.stage_solver)
        if cfg.scheme is SchemeId.Scheme1Adjoint:
            return step_scheme1_adjoint(sys, state, cfg.h, cfg.lam, cfg.stage_solver)
        if cfg.scheme is SchemeId.Scheme2:
            return step_scheme2(sys, state, cfg.h, cfg.lam, cfg.stage_solver)
        if cfg.scheme is SchemeId.Scheme3:
            return step_scheme3(sys, state, cfg.h, cfg.lam, cfg.stage_solver)
        if cfg.scheme is SchemeId.Composed4:
            return step_composed4(sys, state, cfg.h, cfg.lam, cfg.stage_solver)
        if cfg.scheme is SchemeId.Nystrom1:
            return step_nystrom1(sys, state, cfg.h, cfg.lam, cfg.stage_solver)
        if cfg.scheme is SchemeId.AVF:
            return step_avf(sys, state, cfg.h, cfg.avf_nodes, cfg.stage_solver)
        raise ValueError(f"unknown scheme {cfg.scheme!r}")

    times: List[float] = [0.0]
    states: List[PhaseState] = [s0]
    e0, inv0 = _observe(sys, s0, velocity)
    energies: List[float] = [e0]
    invariants: Dict[str, List[float]] = {k: [v] for k, v in inv0.items()}
    lambdas: List[float] = []

    state = s0
    for n in range(1, n_steps + 1):
        try:
            state = stepper(state)
        except (NonConvergenceError, ValueError) as err:
            partial = _make_trajectory(times, states, energies, invariants, lambdas)
            raise IntegrationError(str(err), n, partial) from err
        times.append(n * cfg.h)
        states.append(state)
        e, inv = _observe(sys, state, velocity)
        energies.append(e)
        for k, v in inv.items():
            invariants[k].append(v)
        lambdas.append(cfg.lam)
    return _make_trajectory(times, states, energies, invariants, lambdas)
