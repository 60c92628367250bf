"""Small dense nonlinear solvers for implicit stage equations.

Three primitives are provided: fixed-point iteration and a damped-free
Newton iteration for vector fixed-point problems x = g(x), and a scalar
secant iteration for root problems f(x) = 0.  All are deliberately local:
line searches, trust regions and global root bracketing are out of scope.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "SolverMethod",
    "SolverConfig",
    "SecantConfig",
    "NonConvergenceError",
    "fixed_point_solve",
    "newton_solve",
    "secant_solve",
]

#: Iterates whose norm exceeds this multiple of the starting norm (plus one)
#: are treated as divergent immediately rather than after max_iter.
DIVERGENCE_FACTOR = 1e6

#: Relative step for the finite-difference Jacobian inside `newton_solve`.
JACOBIAN_EPS = 1e-7


class SolverMethod(enum.Enum):
    """Iteration family used for vector fixed-point problems."""

    FIXED_POINT = "fixed-point"
    NEWTON = "newton"


@dataclass(frozen=True)
class SolverConfig:
    """Settings for `fixed_point_solve` / `newton_solve`.

    `tol` is an absolute bound on the update norm ||x_new - x||_inf.
    """

    tol: float = 1e-14
    max_iter: int = 200
    method: SolverMethod = SolverMethod.FIXED_POINT

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class SecantConfig:
    """Settings for the scalar secant iteration.

    `f_tol` is the absolute residual acceptance level; `x_tol` stops the
    iteration once consecutive abscissae coincide to that tolerance.
    """

    x0: float
    x1: float
    f_tol: float = 1e-12
    x_tol: float = 1e-15
    max_iter: int = 50

    def __post_init__(self):
        if self.f_tol <= 0.0 or self.x_tol <= 0.0:
            raise ValueError("f_tol and x_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


class NonConvergenceError(RuntimeError):
    """Raised when an iteration fails; carries the best iterate seen."""

    def __init__(self, message: str, best_x, best_residual: float, iterations: int):
        super().__init__(
            f"{message} (best residual {best_residual:.3e} after {iterations} iterations)"
        )
        self.best_x = best_x
        self.best_residual = float(best_residual)
        self.iterations = int(iterations)


def _update_norm(delta: np.ndarray) -> float:
    return float(np.max(np.abs(delta))) if delta.size else 0.0


def fixed_point_solve(
    g: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    config: Optional[SolverConfig] = None,
) -> np.ndarray:
    """Solve x = g(x) by plain functional iteration from x0.

    Diverging or non-finite iterates abort immediately with
    `NonConvergenceError`; the error carries the best iterate seen.
    """
    cfg = config or SolverConfig()
    x = np.array(x0, dtype=float).reshape(-1)
    scale = 1.0 + float(np.max(np.abs(x))) if x.size else 1.0
    best_x, best_res = x.copy(), np.inf
    for it in range(1, cfg.max_iter + 1):
        x_new = np.asarray(g(x), dtype=float).reshape(-1)
        if x_new.size != x.size or not np.all(np.isfinite(x_new)):
            raise NonConvergenceError(
                "fixed-point iterate became non-finite", best_x, best_res, it
            )
        res = _update_norm(x_new - x)
        if res < best_res:
            best_x, best_res = x_new.copy(), res
        if res <= cfg.tol:
            return x_new
        if float(np.max(np.abs(x_new))) > DIVERGENCE_FACTOR * scale:
            raise NonConvergenceError(
                "fixed-point iteration diverged", best_x, best_res, it
            )
        x = x_new
    raise NonConvergenceError(
        "fixed-point iteration did not converge", best_x, best_res, cfg.max_iter
    )


def newton_solve(
    g: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    config: Optional[SolverConfig] = None,
) -> np.ndarray:
    """Solve x = g(x) by Newton iteration on F(x) = x - g(x).

    The Jacobian of F is built by forward differences each iteration; a
    singular Jacobian falls back to one fixed-point sweep for that step.
    """
    cfg = config or SolverConfig()
    x = np.array(x0, dtype=float).reshape(-1)
    n = x.size
    scale = 1.0 + float(np.max(np.abs(x))) if n else 1.0
    best_x, best_res = x.copy(), np.inf
    for it in range(1, cfg.max_iter + 1):
        gx = np.asarray(g(x), dtype=float).reshape(-1)
        if gx.size != n or not np.all(np.isfinite(gx)):
            raise NonConvergenceError(
                "newton iterate became non-finite", best_x, best_res, it
            )
        F = x - gx
        J = np.eye(n)
        for j in range(n):
            eps = JACOBIAN_EPS * max(1.0, abs(x[j]))
            xj = x.copy()
            xj[j] += eps
            gj = np.asarray(g(xj), dtype=float).reshape(-1)
            J[:, j] = ((xj - gj) - F) / eps
        try:
            delta = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            delta = F  # fixed-point sweep: x - F = g(x)
        x_new = x - delta
        if not np.all(np.isfinite(x_new)):
            raise NonConvergenceError(
                "newton iterate became non-finite", best_x, best_res, it
            )
        res = _update_norm(x_new - x)
        if res < best_res:
            best_x, best_res = x_new.copy(), res
        if res <= cfg.tol:
            return x_new
        if float(np.max(np.abs(x_new))) > DIVERGENCE_FACTOR * scale:
            raise NonConvergenceError("newton iteration diverged", best_x, best_res, it)
        x = x_new
    raise NonConvergenceError(
        "newton iteration did not converge", best_x, best_res, cfg.max_iter
    )


def stage_solve(
    g: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    config: Optional[SolverConfig] = None,
) -> np.ndarray:
    """Dispatch x = g(x) to the iteration named in `config.method`."""
    cfg = config or SolverConfig()
    if cfg.method is SolverMethod.NEWTON:
        return newton_solve(g, x0, cfg)
    return fixed_point_solve(g, x0, cfg)


def secant_solve(f: Callable[[float], float], config: SecantConfig) -> float:
    """Find a root of the scalar f by secant iteration from (x0, x1).

    Accepts any abscissa whose |f| <= f_tol, stops with
    `NonConvergenceError` on flat secants, stagnation, or exhaustion;
    the error carries the best abscissa seen.
    """
    cfg = config
    x0, x1 = float(cfg.x0), float(cfg.x1)
    f0 = float(f(x0))
    if abs(f0) <= cfg.f_tol:
        return x0
    f1 = float(f(x1))
    best_x, best_f = (x0, abs(f0)) if abs(f0) <= abs(f1) else (x1, abs(f1))
    if abs(f1) <= cfg.f_tol:
        return x1
    for it in range(2, cfg.max_iter + 1):
        denom = f1 - f0
        if denom == 0.0 or not np.isfinite(denom):
            raise NonConvergenceError("secant became flat", best_x, best_f, it)
        x2 = x1 - f1 * (x1 - x0) / denom
        if not np.isfinite(x2):
            raise NonConvergenceError("secant iterate non-finite", best_x, best_f, it)
        f2 = float(f(x2))
        if abs(f2) < best_f:
            best_x, best_f = x2, abs(f2)
        if abs(f2) <= cfg.f_tol:
            return x2
        if abs(x2 - x1) <= cfg.x_tol:
            raise NonConvergenceError("secant stagnated", best_x, best_f, it)
        x0, f0, x1, f1 = x1, f1, x2, f2
    raise NonConvergenceError(
        "secant did not converge", best_x, best_f, cfg.max_iter
    )
