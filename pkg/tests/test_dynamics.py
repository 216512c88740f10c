"""Equations of motion, lambda selection, the conservation identity and the
RK4 stepper."""

import numpy as np
import pytest

from fgdyn.basis import FrozenGaussian
from fgdyn.dynamics import (EomMode, IllConditionedBasisError, LambdaPolicy,
                            amplitude_rhs, classical_derivatives, compute_Z,
                            conservation_residual, lambda_gains, propagate,
                            quantum_derivatives, regularized_inverse,
                            select_lambda, step)
from fgdyn.integrals import (GaussianPolynomialOperator, build_bundle,
                             potential_me)
from fgdyn.potentials import ModelHamiltonian

from conftest import dw_initial_state, make_state, random_tbf


def harmonic_ham(k=1.0, mass=1.0):
    op = GaussianPolynomialOperator(1, [(0.5 * k, (2,), (0.0,), (0.0,))])
    return ModelHamiltonian([mass], 1, {(0, 0): op})


def overlapping_dw_state(dw_ham, n=3, seed=41):
    rng = np.random.default_rng(seed)
    tbfs = [random_tbf(rng, [7.5746], center=[-0.8], spread=0.5)
            for _ in range(n)]
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    return make_state(tbfs, dw_ham.masses, 1, c / np.linalg.norm(c))


def per_tbf_residual(state, deriv, Z):
    widths = state.basis.widths[None, :]
    return np.sum(4.0 * widths * deriv.rdot * Z.real
                  + 2.0 * deriv.pdot * Z.imag, axis=1)


# ---------------------------------------------------------------------------
# Derivatives


def test_classical_derivatives(dw_ham):
    state = overlapping_dw_state(dw_ham)
    deriv = classical_derivatives(state, dw_ham)
    basis = state.basis
    assert np.allclose(deriv.rdot, basis.momenta / basis.masses, rtol=1e-14)
    for i, tbf in enumerate(basis.tbfs):
        assert deriv.pdot[i] == pytest.approx(
            -dw_ham.gradient(0, tbf.position), rel=1e-13)
        meanv = potential_me(tbf, tbf, dw_ham.block(0, 0)).real
        kin = float(np.sum(tbf.momentum ** 2 / (2.0 * basis.masses)))
        assert deriv.gdot[i] == pytest.approx(kin - meanv, rel=1e-12)


def test_z_vanishes_for_zero_amplitudes(dw_ham):
    rng = np.random.default_rng(42)
    tbfs = [random_tbf(rng, [7.5746], center=[-0.8]) for _ in range(2)]
    state = make_state(tbfs, dw_ham.masses, 1, [0.0, 0.0])
    bundle = build_bundle(state.basis, dw_ham)
    assert np.all(compute_Z(state, bundle) == 0.0)


def test_single_tbf_velocity_is_classical(dw_ham):
    # With one basis function the energy-conserving equations of motion at
    # lambda = 1 move the center at exactly P/m.
    state = dw_initial_state(1)
    bundle = build_bundle(state.basis, dw_ham)
    deriv = quantum_derivatives(state, bundle, [1.0], dw_ham)
    assert deriv.rdot[0, 0] == pytest.approx(4.694 / 1836.0, rel=1e-12)


def test_nonoverlapping_limit_scales_velocity_by_weight(dw_ham):
    # Far-separated basis functions: the velocity of each center reduces to
    # |c_i|^2 P_i / m.
    sigma = 0.5 / np.sqrt(7.5746)
    tbfs = [
        FrozenGaussian(0, [-0.8], [4.694], 0.0, [7.5746]),
        FrozenGaussian(0, [-0.8 + 25.0 * sigma], [-2.0], 0.3, [7.5746]),
    ]
    c = np.array([0.8, 0.6j])
    state = make_state(tbfs, dw_ham.masses, 1, c)
    bundle = build_bundle(state.basis, dw_ham)
    deriv = quantum_derivatives(state, bundle, [1.0, 1.0], dw_ham)
    for i, tbf in enumerate(tbfs):
        want = abs(c[i]) ** 2 * tbf.momentum[0] / 1836.0
        assert abs(deriv.rdot[i, 0] - want) <= 1e-8


# ---------------------------------------------------------------------------
# Conservation identity


def test_quantum_eom_annihilates_residual_for_any_lambda(dw_ham):
    state = overlapping_dw_state(dw_ham)
    bundle = build_bundle(state.basis, dw_ham)
    Z = compute_Z(state, bundle)
    rng = np.random.default_rng(43)
    for _ in range(5):
        lam = rng.uniform(0.2, 5.0, size=state.basis.n)
        deriv = quantum_derivatives(state, bundle, lam, dw_ham, Z)
        per = per_tbf_residual(state, deriv, Z)
        assert np.max(np.abs(per)) <= 1e-12
        assert abs(conservation_residual(state, bundle, deriv, Z)) <= 1e-12


def test_classical_motion_has_nonzero_residual(dw_ham):
    state = overlapping_dw_state(dw_ham)
    bundle = build_bundle(state.basis, dw_ham)
    deriv = classical_derivatives(state, dw_ham, bundle)
    assert abs(conservation_residual(state, bundle, deriv)) > 1e-10


def test_residual_is_linear_in_velocities(dw_ham):
    state = overlapping_dw_state(dw_ham)
    bundle = build_bundle(state.basis, dw_ham)
    Z = compute_Z(state, bundle)
    deriv = classical_derivatives(state, dw_ham, bundle)
    r1 = conservation_residual(state, bundle, deriv, Z)
    deriv.rdot = 2.0 * deriv.rdot
    deriv.pdot = 2.0 * deriv.pdot
    r2 = conservation_residual(state, bundle, deriv, Z)
    assert r2 == pytest.approx(2.0 * r1, rel=1e-12)


def test_derivatives_invariant_under_global_amplitude_phase(dw_ham):
    state = overlapping_dw_state(dw_ham)
    bundle = build_bundle(state.basis, dw_ham)
    Z = compute_Z(state, bundle)
    rotated = make_state(state.basis.tbfs, dw_ham.masses, 1,
                         state.amplitudes.values * np.exp(0.7j))
    Zrot = compute_Z(rotated, bundle)
    assert np.allclose(Z, Zrot, rtol=1e-12, atol=1e-15)


# ---------------------------------------------------------------------------
# Lambda selection


def test_fixed_one_policy(dw_ham):
    state = overlapping_dw_state(dw_ham)
    bundle = build_bundle(state.basis, dw_ham)
    lam = select_lambda(state, bundle, 0.75, LambdaPolicy("fixed_one"), dw_ham)
    assert np.all(lam == 1.0)


def test_zero_gain_falls_back_to_one():
    ham = harmonic_ham()
    # At rest at the minimum both gain terms vanish.
    tbf = FrozenGaussian(0, [0.0], [0.0], 0.0, [0.5])
    state = make_state([tbf], ham.masses, 1, [1.0])
    bundle = build_bundle(state.basis, ham)
    assert np.all(lambda_gains(state, bundle, ham) == 0.0)
    lam = select_lambda(state, bundle, 0.1,
                        LambdaPolicy("error_function"), ham)
    assert np.all(lam == 1.0)


def test_penalty_weight_limits(dw_ham):
    state = overlapping_dw_state(dw_ham)
    bundle = build_bundle(state.basis, dw_ham)
    heavy = LambdaPolicy("error_function", penalty_weight=1e30)
    assert np.allclose(select_lambda(state, bundle, 0.75, heavy, dw_ham), 1.0)
    light = LambdaPolicy("error_function", penalty_weight=1e-30,
                         bounds=(0.2, 5.0))
    lam = select_lambda(state, bundle, 0.75, light, dw_ham)
    assert np.all(lam >= 0.2) and np.all(lam <= 5.0)
    assert np.any(lam == 0.2)  # tiny anchor weight drives lambda to the floor


def test_shared_lambda_is_uniform(dw_ham):
    state = overlapping_dw_state(dw_ham)
    bundle = build_bundle(state.basis, dw_ham)
    lam = select_lambda(state, bundle, 0.75,
                        LambdaPolicy("error_function", shared=True), dw_ham)
    assert np.all(lam == lam[0])


def test_lambda_policy_validation():
    with pytest.raises(ValueError):
        LambdaPolicy("nonsense")
    with pytest.raises(ValueError):
        LambdaPolicy("error_function", bounds=(2.0, 5.0))


# ---------------------------------------------------------------------------
# Amplitude equation


def test_amplitude_rhs_requires_overlap_derivative(dw_ham):
    state = overlapping_dw_state(dw_ham)
    bundle = build_bundle(state.basis, dw_ham)
    with pytest.raises(ValueError):
        amplitude_rhs(state, bundle)


def test_amplitude_rhs_single_tbf(dw_ham):
    state = dw_initial_state(1)
    deriv = classical_derivatives(state, dw_ham)
    bundle = build_bundle(state.basis, dw_ham, deriv.rdot, deriv.pdot,
                          deriv.gdot)
    cdot = amplitude_rhs(state, bundle)
    c = state.amplitudes.values[0]
    want = -1j * (bundle.H[0, 0] - 1j * bundle.s_dot[0, 0]) * c
    assert cdot[0] == pytest.approx(want, rel=1e-12)


def test_norm_is_conserved_under_both_eoms(dw_ham):
    for mode in (EomMode.classical(), EomMode.quantum()):
        state = dw_initial_state(2)
        for _, current, _ in propagate(state, 0.75, 100, mode, dw_ham):
            pass
        bundle = build_bundle(current.basis, dw_ham)
        c = current.amplitudes.values
        norm = float(np.real(np.vdot(c, bundle.S @ c)))
        assert abs(norm - 1.0) <= 1e-8


# ---------------------------------------------------------------------------
# Stepping


def test_harmonic_period_return():
    ham = harmonic_ham()
    tbf = FrozenGaussian(0, [1.0], [0.0], 0.0, [0.5])
    state = make_state([tbf], ham.masses, 1, [1.0])
    n = 1000
    dt = 2.0 * np.pi / n
    for _, current, _ in propagate(state, dt, n, EomMode.classical(), ham):
        pass
    assert abs(current.basis.positions[0, 0] - 1.0) <= 1e-6
    assert abs(current.basis.momenta[0, 0]) <= 1e-6


def test_mode_validation():
    with pytest.raises(ValueError):
        EomMode("sideways")
    with pytest.raises(ValueError):
        EomMode("auto")  # needs delta
    with pytest.raises(ValueError):
        EomMode.auto(-1.0)
    with pytest.raises(ValueError):
        EomMode.auto(0.1, monitor="entropy")


def test_step_rejects_nonpositive_dt(dw_ham):
    state = dw_initial_state(1)
    with pytest.raises(ValueError):
        step(state, 0.0, EomMode.classical(), dw_ham)


def test_auto_with_huge_threshold_is_bitwise_classical(dw_ham):
    s_cl = dw_initial_state(2)
    s_auto = dw_initial_state(2)
    for _ in range(50):
        s_cl, _ = step(s_cl, 0.75, EomMode.classical(), dw_ham)
    ref = None
    for _ in range(50):
        s_auto, info = step(s_auto, 0.75, EomMode.auto(np.inf), dw_ham,
                            monitor_ref=ref)
        ref = info.monitor_ref
        assert info.kind == "classical" and not info.switched
    assert np.array_equal(s_cl.basis.positions, s_auto.basis.positions)
    assert np.array_equal(s_cl.basis.momenta, s_auto.basis.momenta)
    assert np.array_equal(s_cl.amplitudes.values, s_auto.amplitudes.values)


def test_auto_reference_is_fixed_at_run_start(dw_ham):
    state = dw_initial_state(2)
    refs = []
    for k, _, info in propagate(state, 0.75, 20, EomMode.auto(1e-3), dw_ham):
        if k > 0:
            refs.append(info.monitor_ref)
    assert all(r == refs[0] for r in refs)


def test_auto_switches_when_threshold_is_tight(dw_ham):
    state = dw_initial_state(2)
    kinds = [info.kind
             for _, _, info in propagate(state, 0.75, 200,
                                         EomMode.auto(1e-6), dw_ham)]
    assert "quantum" in kinds


# ---------------------------------------------------------------------------
# Regularized inversion


def test_regularized_inverse_matches_exact_inverse():
    rng = np.random.default_rng(44)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    block = a @ a.conj().T + 3.0 * np.eye(3)
    assert np.allclose(regularized_inverse(block), np.linalg.inv(block),
                       atol=1e-12)


def test_regularized_inverse_rejects_zero_block():
    with pytest.raises(IllConditionedBasisError):
        regularized_inverse(np.zeros((2, 2), dtype=complex))
