"""Phase-space state and Hamiltonian-system descriptors.

A canonical Hamiltonian system on R^d x R^d is described by its energy
H(p, q) together with the gradients H_p, H_q and (optionally) second
derivatives.  Systems are immutable value objects; every evaluation helper
here is pure, so systems and states can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "PhaseState",
    "SeparableStructure",
    "HamiltonianSystem",
    "DerivativeBundle",
    "eval_energy",
    "eval_gradients",
    "fd_gradient",
    "fd_hessians",
]

#: Default finite-difference step scale: cbrt(machine epsilon), the standard
#: optimal scaling for second-order central stencils.
FD_EPS = float(np.finfo(float).eps) ** (1.0 / 3.0)


def _as_clean_vector(x, name: str) -> np.ndarray:
    arr = np.array(x, dtype=float, copy=True).reshape(-1)
    if arr.size < 1:
        raise ValueError(f"{name} must have length >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries: {arr!r}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PhaseState:
    """A point (p, q) in phase space R^d x R^d.

    Both vectors are copied, validated to be finite, and frozen.
    """

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _as_clean_vector(self.p, "p"))
        object.__setattr__(self, "q", _as_clean_vector(self.q, "q"))
        if self.p.size != self.q.size:
            raise ValueError(
                f"p and q must have equal length, got {self.p.size} and {self.q.size}"
            )

    @property
    def dim(self) -> int:
        return self.p.size

    def as_vector(self) -> np.ndarray:
        """Concatenated (p, q) as one writable vector of length 2d."""
        return np.concatenate([self.p, self.q])

    @staticmethod
    def from_vector(x: np.ndarray) -> "PhaseState":
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size % 2 != 0:
            raise ValueError("state vector length must be even")
        d = x.size // 2
        return PhaseState(x[:d], x[d:])


@dataclass(frozen=True)
class SeparableStructure:
    """Descriptor for H = p^T M^-1 p / 2 + U(q).

    Needed only by the Nystrom stepper; `mass` is the d x d matrix M.
    """

    mass: np.ndarray
    potential: Callable[[np.ndarray], float]
    grad_potential: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class HamiltonianSystem:
    """Immutable descriptor of a canonical Hamiltonian system.

    `energy`, `grad_p`, `grad_q` take (p, q) arrays.  `hessians`, when
    provided, returns (H_pp, H_pq, H_qq) with H_pq[i, j] = d^2 H / dp_i dq_j.
    `quadratic_invariants` lists (label, C) pairs for invariants p^T C q.
    """

    dim: int
    energy: Callable[[np.ndarray, np.ndarray], float]
    grad_p: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    grad_q: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    hessians: Optional[
        Callable[
            [np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray]
        ]
    ] = None
    quadratic_invariants: Tuple[Tuple[str, np.ndarray], ...] = ()
    separable: Optional[SeparableStructure] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        cleaned = []
        for label, C in self.quadratic_invariants:
            C = np.array(C, dtype=float, copy=True)
            if C.shape != (self.dim, self.dim):
                raise ValueError(f"invariant {label!r}: C must be {self.dim}x{self.dim}")
            C.setflags(write=False)
            cleaned.append((str(label), C))
        object.__setattr__(self, "quadratic_invariants", tuple(cleaned))


@dataclass(frozen=True)
class DerivativeBundle:
    """Gradients and optional second derivatives of H at one state."""

    h_p: np.ndarray
    h_q: np.ndarray
    h_pp: Optional[np.ndarray] = None
    h_pq: Optional[np.ndarray] = None
    h_qq: Optional[np.ndarray] = None


def _check_dim(sys: HamiltonianSystem, s: PhaseState) -> None:
    if s.dim != sys.dim:
        raise ValueError(f"state dimension {s.dim} != system dimension {sys.dim}")


def eval_energy(sys: HamiltonianSystem, s: PhaseState) -> float:
    """H(p, q) at the given state; raises on non-finite results."""
    _check_dim(sys, s)
    value = float(sys.energy(s.p, s.q))
    if not np.isfinite(value):
        raise ValueError(f"energy is non-finite at p={s.p!r}, q={s.q!r}")
    return value


def fd_gradient(f: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    """Central-difference gradient with per-coordinate step scaling."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        eps = FD_EPS * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += eps
        xm[i] -= eps
        g[i] = (f(xp) - f(xm)) / (2.0 * eps)
    return g


def eval_gradients(sys: HamiltonianSystem, s: PhaseState) -> DerivativeBundle:
    """(H_p, H_q) at the state, analytic when available, else central FD."""
    _check_dim(sys, s)
    if sys.grad_p is not None:
        h_p = np.asarray(sys.grad_p(s.p, s.q), dtype=float)
    else:
        h_p = fd_gradient(lambda p: sys.energy(p, s.q), s.p)
    if sys.grad_q is not None:
        h_q = np.asarray(sys.grad_q(s.p, s.q), dtype=float)
    else:
        h_q = fd_gradient(lambda q: sys.energy(s.p, q), s.q)
    if not (np.all(np.isfinite(h_p)) and np.all(np.isfinite(h_q))):
        raise ValueError(f"gradient is non-finite at p={s.p!r}, q={s.q!r}")
    return DerivativeBundle(h_p=h_p, h_q=h_q)


def fd_hessians(
    sys: HamiltonianSystem, s: PhaseState, eps: Optional[float] = None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Central-difference (H_pp, H_pq, H_qq) at the state.

    Differences the analytic gradients when the system provides them
    (one difference level instead of two), otherwise differences the
    energy twice.  H_pp and H_qq are symmetrized.
    """
    _check_dim(sys, s)
    d = sys.dim
    if eps is not None and eps <= 0.0:
        raise ValueError("eps must be positive")

    def step(base: np.ndarray, i: int) -> float:
        if eps is not None:
            return eps
        return FD_EPS * max(1.0, abs(base[i]))

    def grads(p: np.ndarray, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        st = PhaseState(p, q)
        b = eval_gradients(sys, st)
        return b.h_p, b.h_q

    h_pp = np.empty((d, d))
    h_pq = np.empty((d, d))
    h_qq = np.empty((d, d))
    for j in range(d):
        ep = step(s.p, j)
        pp = s.p.copy()
        pm = s.p.copy()
        pp[j] += ep
        pm[j] -= ep
        gp_plus, _ = grads(pp, s.q)
        gp_minus, _ = grads(pm, s.q)
        h_pp[:, j] = (gp_plus - gp_minus) / (2.0 * ep)

        eq = step(s.q, j)
        qp = s.q.copy()
        qm = s.q.copy()
        qp[j] += eq
        qm[j] -= eq
        gp_plus, gq_plus = grads(s.p, qp)
        gp_minus, gq_minus = grads(s.p, qm)
        h_pq[:, j] = (gp_plus - gp_minus) / (2.0 * eq)
        h_qq[:, j] = (gq_plus - gq_minus) / (2.0 * eq)

    h_pp = 0.5 * (h_pp + h_pp.T)
    h_qq = 0.5 * (h_qq + h_qq.T)
    return h_pp, h_pq, h_qq


def system_hessians(
    sys: HamiltonianSystem, p: np.ndarray, q: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(H_pp, H_pq, H_qq) from the system's analytic callable or FD fallback."""
    if sys.hessians is not None:
        h_pp, h_pq, h_qq = sys.hessians(p, q)
        return (
            np.asarray(h_pp, dtype=float),
            np.asarray(h_pq, dtype=float),
            np.asarray(h_qq, dtype=float),
        )
    return fd_hessians(sys, PhaseState(p, q))
