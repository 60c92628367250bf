"""Bundled benchmark systems and their reference initial states."""

import numpy as np
import pytest

from sympint import (
    OrbitKind,
    PhaseState,
    SingularityError,
    eval_energy,
    eval_gradients,
    henon_heiles_initial,
    kepler_initial,
    make_free_particle,
    make_harmonic_oscillator,
    make_henon_heiles,
    make_perturbed_kepler,
    make_problem,
    oscillator_exact_flow,
)
from sympint.state import fd_gradient

from conftest import random_states


def test_henon_heiles_energy_values():
    hh = make_henon_heiles()
    assert hh.energy(np.zeros(2), np.zeros(2)) == 0.0
    # critical saddle energy
    assert abs(hh.energy(np.zeros(2), np.array([0.0, 1.0])) - 1.0 / 6.0) < 1e-15


def test_henon_heiles_gradient_hand_value():
    hh = make_henon_heiles()
    np.testing.assert_allclose(
        hh.grad_q(np.zeros(2), np.array([0.1, 0.2])), [0.14, 0.17], atol=1e-15
    )


def test_box_initial_state_hits_target_energy():
    hh = make_henon_heiles()
    s = henon_heiles_initial(OrbitKind.Box)
    assert abs(eval_energy(hh, s) - 0.02) <= 1e-14
    assert s.p[0] > 0.0 and s.p[1] == 0.0
    np.testing.assert_array_equal(s.q, [0.0, -0.082])
    assert abs(s.p[0] - 0.18140678414362935) < 1e-14  # frozen regression


def test_chaotic_initial_state_hits_target_energy():
    hh = make_henon_heiles()
    s = henon_heiles_initial(OrbitKind.Chaotic)
    assert abs(eval_energy(hh, s) - 1.0 / 6.0) <= 1e-14
    assert s.p[0] > 0.0
    np.testing.assert_array_equal(s.q, [0.0, 0.82])
    assert abs(s.p[0] - 0.16885496735364341) < 1e-14  # frozen regression


def test_kepler_reference_energy_and_momentum():
    kep = make_perturbed_kepler(0.0075)
    s = kepler_initial(0.6)
    np.testing.assert_array_equal(s.p, [0.0, 2.0])
    np.testing.assert_array_equal(s.q, [0.4, 0.0])
    assert abs(eval_energy(kep, s) - (-0.5390625)) <= 1e-14
    (label, C), = kep.quadratic_invariants
    assert label == "L"
    assert float(s.p @ C @ s.q) == 0.8  # q1 p2 - q2 p1


def test_two_body_reduces_at_mu_zero():
    kep0 = make_perturbed_kepler(0.0)
    assert abs(eval_energy(kep0, kepler_initial(0.6)) - (-0.5)) <= 1e-15


def test_kepler_singularity_guard():
    kep = make_perturbed_kepler(0.0075)
    with pytest.raises(SingularityError):
        kep.energy(np.zeros(2), np.array([1e-13, 0.0]))
    with pytest.raises(SingularityError):
        kep.grad_q(np.zeros(2), np.zeros(2))


def test_kepler_initial_domain():
    s = kepler_initial(0.0)
    np.testing.assert_array_equal(s.p, [0.0, 1.0])
    np.testing.assert_array_equal(s.q, [1.0, 0.0])
    with pytest.raises(ValueError):
        kepler_initial(1.0)
    with pytest.raises(ValueError):
        kepler_initial(-0.1)


def test_kepler_rejects_non_finite_mu():
    with pytest.raises(ValueError):
        make_perturbed_kepler(float("nan"))


def test_oscillator_exact_flow_is_a_rotation():
    osc = make_harmonic_oscillator(1)
    s = PhaseState([1.0], [0.0])
    out = oscillator_exact_flow(s, np.pi / 2.0)
    assert abs(out.p[0]) < 1e-15 and abs(out.q[0] - 1.0) < 1e-15
    assert abs(eval_energy(osc, out) - 0.5) < 1e-15


def test_free_particle_and_oscillator_dimensions():
    assert make_free_particle(3).dim == 3
    assert make_harmonic_oscillator(2).dim == 2
    with pytest.raises(ValueError):
        make_harmonic_oscillator(0)
    with pytest.raises(ValueError):
        make_free_particle(0)


@pytest.mark.parametrize(
    "name,dim",
    [("henon-heiles", 2), ("kepler", 2), ("two-body", 2), ("oscillator", 3), ("free", 3)],
)
def test_problem_registry(name, dim):
    sys_ = make_problem(name, dim=3)
    assert sys_.dim == dim


def test_problem_registry_rejects_unknown_names():
    with pytest.raises(ValueError):
        make_problem("pendulum")


@pytest.mark.parametrize("name", ["henon-heiles", "kepler", "two-body", "oscillator"])
def test_analytic_derivatives_cross_checked_against_fd(name):
    sys_ = make_problem(name, dim=2)
    guard = 0.3 if name in ("kepler", "two-body") else 0.0
    for s in random_states(100, seed=555, q_min_radius=guard):
        b = eval_gradients(sys_, s)
        fd_p = fd_gradient(lambda p: sys_.energy(p, s.q), s.p)
        fd_q = fd_gradient(lambda q: sys_.energy(s.p, q), s.q)
        np.testing.assert_allclose(b.h_p, fd_p, rtol=1e-6, atol=1e-8)
        np.testing.assert_allclose(b.h_q, fd_q, rtol=1e-6, atol=1e-8)


def test_separable_structure_is_consistent():
    for name in ("henon-heiles", "kepler", "oscillator", "free"):
        sys_ = make_problem(name, dim=2)
        sep = sys_.separable
        assert sep is not None
        q = np.array([0.5, 0.2])
        p = np.array([0.1, -0.3])
        kinetic = 0.5 * float(p @ np.linalg.solve(sep.mass, p))
        assert abs(sys_.energy(p, q) - (kinetic + sep.potential(q))) < 1e-14
