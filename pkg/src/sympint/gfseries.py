"""Truncated generating-function series for the one-parameter schemes.

The family of one-step maps studied here is generated, in mixed
coordinates (u, v), by a series S(t, u, v) = sum_i K_i(u, v) t^i whose
first coefficients are

    K1 = H(u, v)
    K2 = (lam - 1/2) * H_u . H_v
    K3 = 1/2 (lam^2 - lam + 1/3) (H_u^T H_vv H_u + H_v^T H_uu H_v)
         + (lam^2 - lam + 1/6) (H_v^T H_uv H_u)

Truncating after r terms and inserting the truncation into the defining
Hamilton-Jacobi relation leaves a residual of size O(t^(r+1)); the
`hj_residual` helper measures that defect directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .state import (
    HamiltonianSystem,
    PhaseState,
    eval_gradients,
    fd_gradient,
    system_hessians,
)

__all__ = ["GFPoint", "k1", "k2", "k3", "hj_residual"]


@dataclass(frozen=True)
class GFPoint:
    """Evaluation point (u, v) in the mixed coordinates of the series."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        state = PhaseState(self.u, self.v)  # reuse validation
        object.__setattr__(self, "u", state.p)
        object.__setattr__(self, "v", state.q)

    @property
    def dim(self) -> int:
        return self.u.size


def _gradients(sys: HamiltonianSystem, pt: GFPoint):
    bundle = eval_gradients(sys, PhaseState(pt.u, pt.v))
    return bundle.h_p, bundle.h_q


def k1(sys: HamiltonianSystem, pt: GFPoint) -> float:
    """First series coefficient: the energy itself."""
    return float(sys.energy(pt.u, pt.v))


def k2(sys: HamiltonianSystem, lam: float, pt: GFPoint) -> float:
    """Second series coefficient; vanishes identically at lam = 1/2."""
    h_u, h_v = _gradients(sys, pt)
    return (lam - 0.5) * float(h_u @ h_v)


def k3(sys: HamiltonianSystem, lam: float, pt: GFPoint) -> float:
    """Third series coefficient."""
    h_u, h_v = _gradients(sys, pt)
    h_uu, h_uv, h_vv = system_hessians(sys, pt.u, pt.v)
    quad = float(h_u @ h_vv @ h_u) + float(h_v @ h_uu @ h_v)
    mixed = float(h_v @ h_uv @ h_u)
    c_quad = 0.5 * (lam * lam - lam + 1.0 / 3.0)
    c_mixed = lam * lam - lam + 1.0 / 6.0
    return c_quad * quad + c_mixed * mixed


def _series_coefficients(sys: HamiltonianSystem, lam: float, r: int):
    if r not in (1, 2, 3):
        raise ValueError("truncation order r must be 1, 2 or 3")
    funcs = [
        lambda u, v: k1(sys, GFPoint(u, v)),
        lambda u, v: k2(sys, lam, GFPoint(u, v)),
        lambda u, v: k3(sys, lam, GFPoint(u, v)),
    ]
    return funcs[:r]


def hj_residual(
    sys: HamiltonianSystem, lam: float, pt: GFPoint, t: float, r: int
) -> float:
    """Hamilton-Jacobi defect of the r-term truncated series at time t.

    Evaluates |dS/dt - H(u - (1 - lam) S_v, v + lam S_u)| with
    S(t, u, v) = sum_{i<=r} K_i(u, v) t^i; the u- and v-gradients of S
    are taken by central differences.  Decays like t^r as t -> 0 (one
    order faster at lam = 1/2 for r = 1 because K2 vanishes there).
    """
    coeffs = _series_coefficients(sys, lam, r)

    def s_of(u: np.ndarray, v: np.ndarray) -> float:
        return sum(f(u, v) * t ** (i + 1) for i, f in enumerate(coeffs))

    ds_dt = sum(
        (i + 1) * f(pt.u, pt.v) * t**i for i, f in enumerate(coeffs)
    )
    s_u = fd_gradient(lambda u: s_of(u, pt.v), pt.u)
    s_v = fd_gradient(lambda v: s_of(pt.u, v), pt.v)
    shifted_p = pt.u - (1.0 - lam) * s_v
    shifted_q = pt.v + lam * s_u
    return float(abs(ds_dt - sys.energy(shifted_p, shifted_q)))
