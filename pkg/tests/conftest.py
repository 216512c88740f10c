"""Shared fixtures and helpers for the fgdyn test suite."""

import numpy as np
import pytest

from fgdyn.basis import (AmplitudeVector, BasisSet, FrozenGaussian,
                         WavefunctionState)
from fgdyn.potentials import (DoubleWellParams, FerrettiParams, double_well,
                              ferretti)

# The double-well and two-state avoided-crossing setups used throughout the
# suite (the same parameters as the bundled presets).
DW_PARAMS = DoubleWellParams(V0=0.02, D=0.0244140625, C=0.03125, R0=0.0,
                             mass=1836.0)
FE_PARAMS = FerrettiParams(X1=4.0, X2=3.0, mx=197136.0, my=6656.4)


@pytest.fixture(scope="session")
def dw_ham():
    return double_well(DW_PARAMS)


@pytest.fixture(scope="session")
def fe_ham():
    return ferretti(FE_PARAMS)


def relerr(a, b):
    """Symmetric relative error; zero when both values vanish."""
    m = max(abs(a), abs(b))
    return 0.0 if m == 0.0 else abs(a - b) / m


def random_tbf(rng, widths, state=0, center=None, spread=0.7):
    """Random TBF with center scattered around ``center`` on the scale of
    the Gaussian's own position/momentum spreads."""
    widths = np.asarray(widths, dtype=float)
    nd = widths.size
    c = np.zeros(nd) if center is None else np.asarray(center, dtype=float)
    sig_r = 0.5 / np.sqrt(widths)
    sig_p = np.sqrt(widths)
    return FrozenGaussian(
        state,
        rng.normal(c, spread * sig_r),
        rng.normal(0.0, spread * sig_p, nd),
        rng.uniform(-np.pi, np.pi),
        widths,
    )


def make_state(tbfs, masses, n_states, amplitudes):
    basis = BasisSet(tuple(tbfs), masses, n_states)
    return WavefunctionState(basis, AmplitudeVector(amplitudes), 0.0)


def dw_initial_state(n_tbfs, seed=7):
    """Wigner-sampled double-well starting state (preset initial packet)."""
    from fgdyn.sampling import InitialWavepacket, initial_state
    wp = InitialWavepacket(0, [-0.8], [4.694], [7.5746])
    return initial_state(wp, n_tbfs, seed, [DW_PARAMS.mass], 1)
