"""Shared fixtures: bundled systems, reference states, and memoized
long-horizon trajectories reused across test modules."""

from __future__ import annotations

import numpy as np
import pytest

from sympint import (
    EquipConfig,
    OrbitKind,
    PhaseState,
    SchemeConfig,
    SchemeId,
    henon_heiles_initial,
    integrate,
    integrate_equip,
    kepler_initial,
    make_harmonic_oscillator,
    make_henon_heiles,
    make_perturbed_kepler,
)
from sympint.cli import _Lcg


@pytest.fixture(scope="session")
def hh():
    return make_henon_heiles()


@pytest.fixture(scope="session")
def kepler():
    return make_perturbed_kepler(0.0075)


@pytest.fixture(scope="session")
def two_body():
    return make_perturbed_kepler(0.0)


@pytest.fixture(scope="session")
def osc2():
    return make_harmonic_oscillator(2)


@pytest.fixture(scope="session")
def box_state():
    return henon_heiles_initial(OrbitKind.Box)


@pytest.fixture(scope="session")
def chaotic_state():
    return henon_heiles_initial(OrbitKind.Chaotic)


@pytest.fixture(scope="session")
def kepler_state():
    return kepler_initial(0.6)


def random_states(n: int, dim: int = 2, seed: int = 12345, q_min_radius: float = 0.0):
    """Deterministic random phase states with entries in [-1, 1]."""
    rng = _Lcg(seed)
    states = []
    while len(states) < n:
        p = np.array([rng.uniform() for _ in range(dim)])
        q = np.array([rng.uniform() for _ in range(dim)])
        if q_min_radius and float(q @ q) < q_min_radius**2:
            continue
        states.append(PhaseState(p, q))
    return states


@pytest.fixture(scope="session")
def equip_runs(hh, kepler, box_state, chaotic_state, kepler_state):
    """Memoized energy-conserving trajectories to t = 1000.

    Keyed by (orbit, base scheme, h); computed on first request.
    """
    setups = {
        "box": (hh, box_state),
        "chaotic": (hh, chaotic_state),
        "kepler": (kepler, kepler_state),
    }
    cache = {}

    def get(orbit: str, base: SchemeId, h: float):
        key = (orbit, base, h)
        if key not in cache:
            sys_, s0 = setups[orbit]
            cfg = EquipConfig(base=base)
            cache[key] = integrate_equip(sys_, cfg, s0, h, round(1000.0 / h))
        return cache[key]

    return get


@pytest.fixture(scope="session")
def symplectic_long_runs(hh, kepler, box_state, chaotic_state, kepler_state):
    """Memoized fixed-parameter trajectories to t = 1000 at h = 0.02."""
    setups = {
        "box": (hh, box_state),
        "chaotic": (hh, chaotic_state),
        "kepler": (kepler, kepler_state),
    }
    cache = {}

    def get(orbit: str, scheme: SchemeId, lam: float):
        key = (orbit, scheme, lam)
        if key not in cache:
            sys_, s0 = setups[orbit]
            cfg = SchemeConfig(scheme=scheme, lam=lam, h=0.02)
            cache[key] = integrate(sys_, cfg, s0, 50000)
        return cache[key]

    return get
