"""Exact diagonalization / exact ITE oracles."""

import numpy as np
import pytest

from mtqite.models import build_tfim, build_xxz
from mtqite.oracles import GroundSpace, exact_ground, exact_ite, fidelity
from mtqite.pauli import ObservableSum
from mtqite.states import StateVector, expectation, inner

from conftest import random_state_array


def test_ground_of_single_z():
    gs = exact_ground(ObservableSum.from_label_terms([(1.0, "Z")]))
    assert gs.energy == -1.0
    assert gs.degeneracy == 1
    assert abs(gs.basis[0].amplitudes[1]) == 1.0


def test_xxz_two_site_singlet():
    gs = exact_ground(build_xxz(2, 1.0))
    assert abs(gs.energy - (-3.0)) < 1e-12
    assert gs.degeneracy == 1
    singlet = np.zeros(4, dtype=complex)
    singlet[0b01] = 1 / np.sqrt(2)
    singlet[0b10] = -1 / np.sqrt(2)
    assert abs(abs(np.vdot(singlet, gs.basis[0].amplitudes)) - 1.0) < 1e-12


def test_classical_ising_degeneracy():
    gs = exact_ground(build_tfim(6, 0.0))
    assert abs(gs.energy - (-5.0)) < 1e-12
    assert gs.degeneracy == 2


def test_exact_ite_zero_tau_is_identity(rng):
    psi = StateVector(2, random_state_array(rng, 2))
    h = build_xxz(2, 0.7)
    assert exact_ite(psi, h, 0.0) is psi


def test_exact_ite_projects_plus_to_one():
    plus = StateVector(1, np.array([1.0, 1.0]) / np.sqrt(2))
    h = ObservableSum.from_label_terms([(1.0, "Z")])
    out = exact_ite(plus, h, 10.0)
    assert abs(abs(out.amplitudes[1]) - 1.0) < 1e-8


def test_exact_ite_energy_monotone(rng):
    h = build_xxz(3, 1.3)
    psi = StateVector(3, random_state_array(rng, 3))
    energies = [
        expectation(exact_ite(psi, h, tau), h).real for tau in np.linspace(0, 3, 13)
    ]
    diffs = np.diff(energies)
    assert np.all(diffs <= 1e-10)


def test_fidelity_convergence_under_ite(rng):
    h = build_tfim(4, 0.8)
    gs = exact_ground(h)
    psi = StateVector(4, random_state_array(rng, 4))
    fids = [fidelity(exact_ite(psi, h, tau), gs) for tau in (0.0, 2.0, 10.0, 40.0)]
    assert fids[-1] > 1.0 - 1e-8
    assert all(b >= a - 1e-12 for a, b in zip(fids, fids[1:]))


def test_fidelity_edge_cases(rng):
    h = build_xxz(2, 1.0)
    gs = exact_ground(h)
    assert abs(fidelity(gs.basis[0], gs) - 1.0) < 1e-12
    orthogonal = StateVector.from_bitstring("00")
    assert fidelity(orthogonal, gs) < 1e-12
    psi = StateVector(2, random_state_array(rng, 2))
    assert abs(fidelity(psi, gs) - abs(inner(gs.basis[0], psi)) ** 2) < 1e-12


def test_ground_energy_below_random_rayleigh(rng):
    h = build_xxz(4, 0.9)
    gs = exact_ground(h)
    for _ in range(200):
        psi = StateVector(4, random_state_array(rng, 4))
        assert expectation(psi, h).real >= gs.energy - 1e-10


def test_trotterized_ite_error_scaling(rng):
    """Trotter product error per fixed total time shrinks as O(1/n)."""
    h1 = ObservableSum.from_label_terms([(1.0, "XXI"), (1.0, "YYI"), (1.0, "ZZI")])
    h2 = ObservableSum.from_label_terms([(1.0, "IXX"), (1.0, "IYY"), (1.0, "IZZ")])
    h = h1 + h2
    beta = 1.0
    psi = StateVector(3, random_state_array(rng, 3))
    target = exact_ite(psi, h, beta)
    errors = []
    for n in (4, 8, 16, 32):
        state = psi
        for _ in range(n):
            state = exact_ite(state, h1, beta / n)
            state = exact_ite(state, h2, beta / n)
        errors.append(np.linalg.norm(state.amplitudes - target.amplitudes))
    slope = np.polyfit(np.log([4, 8, 16, 32]), np.log(errors), 1)[0]
    assert -1.35 < slope < -0.65
