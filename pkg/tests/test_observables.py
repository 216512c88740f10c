"""Energies, weights, populations and the CSV frame schema."""

import numpy as np
import pytest

from fgdyn.basis import FrozenGaussian
from fgdyn.dynamics import EomMode
from fgdyn.integrals import GaussianPolynomialOperator, build_bundle
from fgdyn.observables import (classical_energy, frame_columns, make_frame,
                               quantum_energy, state_populations, weights)
from fgdyn.potentials import ModelHamiltonian
from fgdyn.quadrature import gh_kinetic_factor, gh_matrix_element
from fgdyn.sampling import InitialWavepacket, initial_state

from conftest import DW_PARAMS, FE_PARAMS, dw_initial_state, make_state, \
    random_tbf


def test_quantum_energy_matches_brute_force_sum(dw_ham):
    state = dw_initial_state(3, seed=11)
    bundle = build_bundle(state.basis, dw_ham)
    c = state.amplitudes.values
    tbfs = state.basis.tbfs
    num = 0.0j
    den = 0.0j
    for i, bra in enumerate(tbfs):
        for j, ket in enumerate(tbfs):
            h = gh_matrix_element(bra, ket, gh_kinetic_factor(ket, dw_ham.masses)) \
                + gh_matrix_element(bra, ket, lambda p: dw_ham.block(0, 0)(p))
            num += np.conj(c[i]) * h * c[j]
            den += np.conj(c[i]) * gh_matrix_element(bra, ket) * c[j]
    assert quantum_energy(state, bundle) == pytest.approx(
        float(num.real / den.real), abs=1e-8)


def test_quantum_energy_of_harmonic_ground_state():
    # Coherent-width TBF at the minimum of a k = m = 1 harmonic well: the
    # exact ground state, energy 1/2.
    op = GaussianPolynomialOperator(1, [(0.5, (2,), (0.0,), (0.0,))])
    ham = ModelHamiltonian([1.0], 1, {(0, 0): op})
    tbf = FrozenGaussian(0, [0.0], [0.0], 0.0, [0.5])
    state = make_state([tbf], ham.masses, 1, [1.0])
    bundle = build_bundle(state.basis, ham)
    assert quantum_energy(state, bundle) == pytest.approx(0.5, rel=1e-13)


def test_quantum_energy_invariances(dw_ham):
    state = dw_initial_state(2, seed=11)
    bundle = build_bundle(state.basis, dw_ham)
    e = quantum_energy(state, bundle)
    for factor in (np.exp(0.3j), 2.5):
        scaled = make_state(state.basis.tbfs, dw_ham.masses, 1,
                            state.amplitudes.values * factor)
        assert quantum_energy(scaled, bundle) == pytest.approx(e, rel=1e-12)
    zero = make_state(state.basis.tbfs, dw_ham.masses, 1, [0.0, 0.0])
    with pytest.raises(ZeroDivisionError):
        quantum_energy(zero, bundle)


def test_classical_energy_landmarks(dw_ham):
    lo, _ = DW_PARAMS.minima
    tbf = FrozenGaussian(0, [lo], [0.0], 0.0, [7.5746])
    state = make_state([tbf], dw_ham.masses, 1, [1.0])
    per, total = classical_energy(state, dw_ham)
    vmin = DW_PARAMS.V0 - DW_PARAMS.C ** 2 / (4.0 * DW_PARAMS.D)
    assert per[0] == pytest.approx(vmin, abs=1e-14)
    assert total == pytest.approx(vmin, abs=1e-14)
    # Center energies ignore phases and amplitudes.
    rotated = make_state([FrozenGaussian(0, [lo], [0.0], 1.2, [7.5746])],
                         dw_ham.masses, 1, [0.3 - 0.1j])
    per2, _ = classical_energy(rotated, dw_ham)
    assert per2[0] == per[0]


def test_weight_definitions(dw_ham):
    state = dw_initial_state(3, seed=11)
    bundle = build_bundle(state.basis, dw_ham)
    raw, mull = weights(state, bundle)
    assert np.sum(mull) == pytest.approx(1.0, abs=1e-12)
    assert np.sum(raw) == pytest.approx(1.0, abs=1e-12)

    # Orthogonal (far-separated) basis: the two definitions coincide.
    sigma = 0.5 / np.sqrt(7.5746)
    tbfs = [FrozenGaussian(0, [-0.8 + 30.0 * sigma * k], [0.0], 0.0, [7.5746])
            for k in range(2)]
    c = np.array([0.8, 0.6j])
    far = make_state(tbfs, dw_ham.masses, 1, c)
    fb = build_bundle(far.basis, dw_ham)
    raw, mull = weights(far, fb)
    assert np.allclose(raw, mull, atol=1e-10)
    assert raw[0] == pytest.approx(0.64, rel=1e-12)

    single = dw_initial_state(1)
    sb = build_bundle(single.basis, dw_ham)
    raw, mull = weights(single, sb)
    assert raw[0] == pytest.approx(1.0, rel=1e-12)
    assert mull[0] == pytest.approx(1.0, rel=1e-12)


def test_state_populations(fe_ham):
    wp = InitialWavepacket(0, [2.0, 0.0], [0.0, 0.0], [22.2, 12.9])
    state = initial_state(wp, 3, seed=14, masses=fe_ham.masses, n_states=2)
    bundle = build_bundle(state.basis, fe_ham)
    pops = state_populations(state, bundle)
    assert pops.shape == (2,)
    assert np.sum(pops) == pytest.approx(1.0, abs=1e-10)
    assert np.all(pops >= -1e-8) and np.all(pops <= 1.0 + 1e-8)
    assert pops[0] == pytest.approx(1.0, abs=1e-8)  # packet starts on state 0


def test_frame_schema_and_value_alignment(dw_ham):
    state = dw_initial_state(2, seed=11)
    cols = frame_columns(2, 1, 1)
    assert cols[:5] == ["time", "e_qm", "e_cl_total", "norm", "residual"]
    assert cols[5] == "pop_state_0"
    assert cols[6:11] == ["e_cl_0", "w_raw_0", "w_mull_0", "r_0_0", "p_0_0"]
    rec = make_frame(state, dw_ham, "classical", 0.75, EomMode.classical())
    vals = rec.values()
    assert len(vals) == len(cols)
    assert vals[cols.index("time")] == state.time
    assert vals[cols.index("r_1_0")] == state.basis.positions[1, 0]
    assert vals[cols.index("p_0_0")] == state.basis.momenta[0, 0]
    assert vals[cols.index("norm")] == pytest.approx(1.0, abs=1e-10)
    bundle = build_bundle(state.basis, dw_ham)
    assert vals[cols.index("e_qm")] == pytest.approx(
        quantum_energy(state, bundle), rel=1e-12)


def test_quantum_frame_residual_is_tiny(dw_ham):
    state = dw_initial_state(2, seed=11)
    rec = make_frame(state, dw_ham, "quantum", 0.75, EomMode.quantum())
    assert abs(rec.residual) <= 1e-12
