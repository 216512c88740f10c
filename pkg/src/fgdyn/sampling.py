"""Initial conditions: phase-space sampling from the Gaussian Wigner
distribution of the initial wavepacket, and projection of that wavepacket
onto the sampled basis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import AmplitudeVector, BasisSet, FrozenGaussian, WavefunctionState
from .dynamics import regularized_inverse
from .integrals import build_bundle, overlap

__all__ = [
    "ProjectionError",
    "InitialWavepacket",
    "wigner_sample",
    "project_amplitudes",
    "initial_state",
]


class ProjectionError(RuntimeError):
    """Initial wavepacket has no support on the sampled basis."""


@dataclass(frozen=True)
class InitialWavepacket:
    """Gaussian initial wavepacket on one electronic state."""

    state: int
    position: np.ndarray
    momentum: np.ndarray
    widths: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "momentum", np.asarray(self.momentum, dtype=float))
        object.__setattr__(self, "widths", np.asarray(self.widths, dtype=float))
        if not np.all(self.widths > 0):
            raise ValueError("wavepacket widths must be positive")

    @property
    def ndof(self) -> int:
        return self.position.size

    def as_tbf(self) -> FrozenGaussian:
        return FrozenGaussian(self.state, self.position, self.momentum, 0.0,
                              self.widths)


def wigner_sample(wp: InitialWavepacket, n: int, seed: int):
    """Phase-space centers drawn from the wavepacket's Wigner distribution.

    The first center sits exactly at the wavepacket center so single-TBF
    runs are deterministic; the rest are drawn per DOF with
    sigma_R = 1/(2 sqrt(a)) and sigma_P = sqrt(a)  (hbar = 1).
    """
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    sigma_r = 0.5 / np.sqrt(wp.widths)
    sigma_p = np.sqrt(wp.widths)
    centers = [(wp.position.copy(), wp.momentum.copy())]
    for _ in range(n - 1):
        r = rng.normal(wp.position, sigma_r)
        p = rng.normal(wp.momentum, sigma_p)
        centers.append((r, p))
    return centers


def project_amplitudes(basis: BasisSet, wp: InitialWavepacket) -> AmplitudeVector:
    """Amplitudes representing the wavepacket in the (nonorthogonal) basis.

    Solves S C = b with b_i = <chi_i|psi0> through the regularized inverse
    of the same-state overlap block, then renormalizes to C^dag S C = 1.
    """
    psi0 = wp.as_tbf()
    b = np.zeros(basis.n, dtype=complex)
    idx = basis.state_indices(wp.state)
    for i in idx:
        b[i] = overlap(basis.tbfs[i], psi0)
    if not np.any(np.abs(b) > 1e-300):
        raise ProjectionError("initial wavepacket has zero overlap with the basis")
    c = np.zeros(basis.n, dtype=complex)
    S = np.zeros((basis.n, basis.n), dtype=complex)
    for a in idx:
        for bb in idx:
            S[a, bb] = overlap(basis.tbfs[a], basis.tbfs[bb])
    sb = S[np.ix_(idx, idx)]
    sinv = regularized_inverse(sb, S, idx)
    c[idx] = sinv @ b[idx]
    norm = float(np.real(np.vdot(c[idx], sb @ c[idx])))
    if norm <= 0.0:
        raise ProjectionError("projected amplitudes have zero norm")
    c = c / np.sqrt(norm)
    return AmplitudeVector(c)


def initial_state(wp: InitialWavepacket, n_tbfs: int, seed: int, masses,
                  n_states: int, replicate_states: bool = True) -> WavefunctionState:
    """Wigner-sampled starting state at t = 0.

    Sampled TBFs inherit the wavepacket widths exactly.  For multistate
    models each sampled phase-space center carries one TBF per electronic
    state (population can then transfer without spawning); set
    ``replicate_states`` False to keep TBFs on the wavepacket's state only.
    """
    centers = wigner_sample(wp, n_tbfs, seed)
    states = range(n_states) if (replicate_states and n_states > 1) else [wp.state]
    tbfs = [
        FrozenGaussian(s, r, p, 0.0, wp.widths)
        for (r, p) in centers
        for s in states
    ]
    basis = BasisSet(tuple(tbfs), masses, n_states)
    return WavefunctionState(basis, project_amplitudes(basis, wp), 0.0)
