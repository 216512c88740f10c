"""Model potential surfaces: pointwise values, landmarks and validation."""

import numpy as np
import pytest

from fgdyn.integrals import GaussianPolynomialOperator
from fgdyn.potentials import (ConfigError, DoubleWellParams, FerrettiParams,
                              ModelHamiltonian, double_well, ferretti)

from conftest import DW_PARAMS, FE_PARAMS


def test_double_well_pointwise():
    ham = double_well(DW_PARAMS)
    rng = np.random.default_rng(31)
    x = rng.uniform(-2.0, 2.0, size=1000)
    p = DW_PARAMS
    want = p.V0 + p.D * (x - p.R0) ** 4 - p.C * (x - p.R0) ** 2
    got = np.array([ham.evaluate(0, 0, [xi]) for xi in x])
    assert np.max(np.abs(got - want)) <= 1e-14


def test_double_well_landmarks():
    p = DW_PARAMS
    ham = double_well(p)
    lo, hi = p.minima
    assert hi == pytest.approx(np.sqrt(p.C / (2 * p.D)), rel=1e-14)
    assert lo == -hi
    vmin = p.V0 - p.C ** 2 / (4 * p.D)
    assert ham.evaluate(0, 0, [lo]) == pytest.approx(vmin, abs=1e-15)
    assert ham.evaluate(0, 0, [hi]) == pytest.approx(vmin, abs=1e-15)
    assert p.barrier_height == pytest.approx(p.C ** 2 / (4 * p.D), rel=1e-14)
    # Barrier top sits at R0, barrier_height above the minima.
    assert ham.evaluate(0, 0, [p.R0]) - vmin == pytest.approx(
        p.barrier_height, rel=1e-12)
    # Gradient vanishes at the stationary points.
    for r in (lo, p.R0, hi):
        assert ham.gradient(0, [r])[0] == pytest.approx(0.0, abs=1e-14)


def test_two_state_model_pointwise():
    p = FE_PARAMS
    ham = ferretti(p)
    rng = np.random.default_rng(32)
    pts = rng.uniform(-1.0, 6.0, size=(1000, 2))
    x, y = pts[:, 0], pts[:, 1]
    v11 = 0.5 * p.kx * (x - p.X1) ** 2 + 0.5 * p.ky * y ** 2
    v22 = 0.5 * p.kx * (x - p.X2) ** 2 + 0.5 * p.ky * y ** 2 + p.delta
    v12 = p.gamma_c * y * np.exp(-p.alpha_c * (x - p.X3) ** 2
                                 - p.beta_c * y ** 2)
    for want, (i, j) in ((v11, (0, 0)), (v22, (1, 1)), (v12, (0, 1))):
        got = np.array([ham.evaluate(i, j, pt) for pt in pts])
        assert np.max(np.abs(got - want)) <= 1e-14


def test_two_state_model_landmarks():
    p = FE_PARAMS
    ham = ferretti(p)
    assert ham.evaluate(0, 0, [p.X1, 0.0]) == pytest.approx(0.0, abs=1e-15)
    assert ham.evaluate(1, 1, [p.X2, 0.0]) == pytest.approx(p.delta, rel=1e-14)
    # The coupling is odd in y, hence zero along y = 0, and the same block
    # serves both orderings of the state pair.
    for x in np.linspace(0.0, 5.0, 11):
        assert ham.evaluate(0, 1, [x, 0.0]) == 0.0
        assert ham.evaluate(1, 0, [x, 0.3]) == ham.evaluate(0, 1, [x, 0.3])


def test_parameter_validation():
    with pytest.raises(ConfigError):
        DoubleWellParams(V0=0.0, D=-1.0, C=0.1, R0=0.0, mass=1.0)
    with pytest.raises(ConfigError):
        DoubleWellParams(V0=0.0, D=1.0, C=-0.1, R0=0.0, mass=1.0)
    with pytest.raises(ConfigError):
        DoubleWellParams(V0=0.0, D=1.0, C=0.1, R0=0.0, mass=-1.0)
    with pytest.raises(ConfigError):
        FerrettiParams(X1=4.0, X2=3.0, mx=1.0, my=1.0, kx=-0.01)
    with pytest.raises(ConfigError):
        FerrettiParams(X1=4.0, X2=3.0, mx=1.0, my=-1.0)
    with pytest.raises(ConfigError):
        FerrettiParams(X1=4.0, X2=3.0, mx=1.0, my=1.0, alpha_c=0.0)


def test_missing_blocks():
    op = GaussianPolynomialOperator(1, [(1.0, (2,), (0.0,), (0.0,))])
    ham = ModelHamiltonian([1.0], 2, {(0, 0): op})
    assert ham.evaluate(1, 1, [0.5]) == 0.0
    assert ham.block(0, 1) is None
    with pytest.raises(ConfigError):
        ham.gradient(1, [0.5])
