"""Benchmark systems: anharmonic plane potential, perturbed two-body
problem, and two analytically solvable fixtures.

Every bundled system carries analytic gradients and Hessians plus the
separable structure H = |p|^2/2 + U(q), so each one works with every
stepper in `schemes`, including the Nystrom form.
"""

from __future__ import annotations

import enum
import math
from typing import Dict, Callable

import numpy as np

from .state import HamiltonianSystem, PhaseState, SeparableStructure

__all__ = [
    "ProblemId",
    "OrbitKind",
    "SingularityError",
    "make_henon_heiles",
    "henon_heiles_initial",
    "make_perturbed_kepler",
    "kepler_initial",
    "make_harmonic_oscillator",
    "make_free_particle",
    "oscillator_exact_flow",
    "make_problem",
    "PROBLEM_NAMES",
]

#: Default strength of the 1/r^3 perturbation in the two-body problem.
DEFAULT_MU = 0.0075

#: Radii below this raise `SingularityError` instead of returning Inf.
KEPLER_GUARD_RADIUS = 1e-12


class ProblemId(enum.Enum):
    HarmonicOscillator = "oscillator"
    FreeParticle = "free"
    HenonHeiles = "henon-heiles"
    PerturbedKepler = "kepler"
    TwoBody = "two-body"
    Custom = "custom"


class OrbitKind(enum.Enum):
    Box = "box"
    Chaotic = "chaotic"


class SingularityError(ValueError):
    """Evaluation requested too close to the potential's singularity."""


# ---------------------------------------------------------------------------
# Henon-Heiles


def _hh_potential(q: np.ndarray) -> float:
    q1, q2 = q
    return 0.5 * (q1 * q1 + q2 * q2) + q1 * q1 * q2 - q2**3 / 3.0


def _hh_grad_u(q: np.ndarray) -> np.ndarray:
    q1, q2 = q
    return np.array([q1 + 2.0 * q1 * q2, q2 + q1 * q1 - q2 * q2])


def make_henon_heiles() -> HamiltonianSystem:
    """Plane motion in U = (q1^2 + q2^2)/2 + q1^2 q2 - q2^3/3 (d = 2).

    The classic bounded/chaotic test potential; motion is bounded below
    the critical energy 1/6.  No bilinear invariant is declared.
    """

    def energy(p, q):
        return 0.5 * float(p @ p) + _hh_potential(q)

    def grad_p(p, q):
        return np.array(p, dtype=float)

    def grad_q(p, q):
        return _hh_grad_u(q)

    def hessians(p, q):
        q1, q2 = q
        h_qq = np.array([[1.0 + 2.0 * q2, 2.0 * q1], [2.0 * q1, 1.0 - 2.0 * q2]])
        return np.eye(2), np.zeros((2, 2)), h_qq

    return HamiltonianSystem(
        dim=2,
        energy=energy,
        grad_p=grad_p,
        grad_q=grad_q,
        hessians=hessians,
        separable=SeparableStructure(np.eye(2), _hh_potential, _hh_grad_u),
    )


def henon_heiles_initial(kind: OrbitKind) -> PhaseState:
    """Initial state of the box (H0 = 0.02) or chaotic (H0 = 1/6) orbit.

    q and p2 are fixed; p1 is the positive root of H(p, q) = H0.
    """
    if kind is OrbitKind.Box:
        h0, q = 0.02, np.array([0.0, -0.082])
    elif kind is OrbitKind.Chaotic:
        h0, q = 1.0 / 6.0, np.array([0.0, 0.82])
    else:
        raise ValueError(f"unknown orbit kind {kind!r}")
    radicand = 2.0 * (h0 - _hh_potential(q))
    if radicand < 0.0:
        raise ValueError(f"energy {h0} below the potential at q={q!r}")
    return PhaseState(np.array([math.sqrt(radicand), 0.0]), q)


# ---------------------------------------------------------------------------
# perturbed two-body problem


def make_perturbed_kepler(mu: float = DEFAULT_MU) -> HamiltonianSystem:
    """Plane motion in U(r) = -1/r - mu/(3 r^3) (d = 2).

    mu = 0 is the classical two-body problem; small mu adds the
    relativistic 1/r^3 correction and makes the ellipse precess.
    Declares the angular momentum L = q1 p2 - q2 p1 as a bilinear
    invariant p^T C q with C = [[0, -1], [1, 0]].
    """
    mu = float(mu)
    if not np.isfinite(mu):
        raise ValueError("mu must be finite")

    def radius(q) -> float:
        r = float(np.sqrt(q @ q))
        if r < KEPLER_GUARD_RADIUS:
            raise SingularityError(f"|q| = {r:.3e} is inside the guard radius")
        return r

    def potential(q) -> float:
        r = radius(q)
        return -1.0 / r - mu / (3.0 * r**3)

    def grad_u(q) -> np.ndarray:
        r = radius(q)
        return np.asarray(q, dtype=float) * (r**-3 + mu * r**-5)

    def energy(p, q):
        return 0.5 * float(p @ p) + potential(q)

    def grad_p(p, q):
        return np.array(p, dtype=float)

    def hessians(p, q):
        r = radius(q)
        qv = np.asarray(q, dtype=float)
        scalar = r**-3 + mu * r**-5
        outer = np.outer(qv, qv) * (3.0 * r**-5 + 5.0 * mu * r**-7)
        return np.eye(2), np.zeros((2, 2)), scalar * np.eye(2) - outer

    angular_momentum_c = np.array([[0.0, -1.0], [1.0, 0.0]])
    return HamiltonianSystem(
        dim=2,
        energy=energy,
        grad_p=grad_p,
        grad_q=lambda p, q: grad_u(q),
        hessians=hessians,
        quadratic_invariants=(("L", angular_momentum_c),),
        separable=SeparableStructure(np.eye(2), potential, grad_u),
    )


def kepler_initial(e: float) -> PhaseState:
    """Orbit start p = (0, sqrt((1+e)/(1-e))), q = (1-e, 0) for 0 <= e < 1."""
    e = float(e)
    if not 0.0 <= e < 1.0:
        raise ValueError("eccentricity must satisfy 0 <= e < 1")
    return PhaseState(
        np.array([0.0, math.sqrt((1.0 + e) / (1.0 - e))]),
        np.array([1.0 - e, 0.0]),
    )


# ---------------------------------------------------------------------------
# solvable fixtures


def make_harmonic_oscillator(d: int = 1) -> HamiltonianSystem:
    """H = (|p|^2 + |q|^2)/2 in d degrees of freedom (exact flow: rotation)."""
    if d < 1:
        raise ValueError("d must be >= 1")

    potential = lambda q: 0.5 * float(q @ q)
    grad_u = lambda q: np.array(q, dtype=float)

    return HamiltonianSystem(
        dim=d,
        energy=lambda p, q: 0.5 * float(p @ p) + 0.5 * float(q @ q),
        grad_p=lambda p, q: np.array(p, dtype=float),
        grad_q=lambda p, q: np.array(q, dtype=float),
        hessians=lambda p, q: (np.eye(d), np.zeros((d, d)), np.eye(d)),
        separable=SeparableStructure(np.eye(d), potential, grad_u),
    )


def make_free_particle(d: int = 1) -> HamiltonianSystem:
    """H = |p|^2 / 2: straight-line drift, exact for every bundled scheme."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return HamiltonianSystem(
        dim=d,
        energy=lambda p, q: 0.5 * float(p @ p),
        grad_p=lambda p, q: np.array(p, dtype=float),
        grad_q=lambda p, q: np.zeros(d),
        hessians=lambda p, q: (np.eye(d), np.zeros((d, d)), np.zeros((d, d))),
        separable=SeparableStructure(
            np.eye(d), lambda q: 0.0, lambda q: np.zeros(d)
        ),
    )


def oscillator_exact_flow(s: PhaseState, t: float) -> PhaseState:
    """Exact oscillator solution: rotation by angle t in each (p_i, q_i)."""
    c, sn = math.cos(t), math.sin(t)
    return PhaseState(c * s.p - sn * s.q, c * s.q + sn * s.p)


# ---------------------------------------------------------------------------
# name registry for the command line

PROBLEM_NAMES = ("henon-heiles", "kepler", "two-body", "oscillator", "free")


def make_problem(name: str, mu: float = DEFAULT_MU, dim: int = 1) -> HamiltonianSystem:
    """Build a bundled system from its command-line name."""
    factories: Dict[str, Callable[[], HamiltonianSystem]] = {
        "henon-heiles": make_henon_heiles,
        "kepler": lambda: make_perturbed_kepler(mu),
        "two-body": lambda: make_perturbed_kepler(0.0),
        "oscillator": lambda: make_harmonic_oscillator(dim),
        "free": lambda: make_free_particle(dim),
    }
    if name not in factories:
        raise ValueError(
            f"unknown problem {name!r}; choose from {', '.join(PROBLEM_NAMES)}"
        )
    return factories[name]()
