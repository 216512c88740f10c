"""Frozen-Gaussian trajectory basis functions (TBFs) and the wavefunction state.

A TBF is a multidimensional product of one-dimensional Gaussians with a
fixed (frozen) width per degree of freedom, a moving phase-space center
(R, P) and a global phase gamma:

    chi(x) = exp(i*gamma) * prod_rho (2*a_rho/pi)^(1/4)
             * exp(-a_rho*(x_rho - R_rho)^2 + i*P_rho*(x_rho - R_rho))

Each 1-D factor is L2-normalized by construction.  Atomic units are used
throughout (hbar = 1); masses are carried per DOF by the basis set.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

__all__ = [
    "BasisError",
    "FrozenGaussian",
    "BasisSet",
    "AmplitudeVector",
    "WavefunctionState",
    "evaluate_tbf",
]


class BasisError(ValueError):
    """Invalid basis construction or evaluation request."""


def _readonly_float(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != 1:
        raise BasisError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FrozenGaussian:
    """One trajectory basis function.

    Parameters
    ----------
    state : int
        Electronic state label (>= 0).
    position : array_like
        Gaussian center R per DOF (bohr).
    momentum : array_like
        Center momentum P per DOF (a.u.).
    phase : float
        Global phase gamma (radians).
    widths : array_like
        Gaussian width parameter per DOF (bohr^-2), strictly positive.
    """

    state: int
    position: np.ndarray
    momentum: np.ndarray
    phase: float
    widths: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _readonly_float(self.position, "position"))
        object.__setattr__(self, "momentum", _readonly_float(self.momentum, "momentum"))
        object.__setattr__(self, "widths", _readonly_float(self.widths, "widths"))
        object.__setattr__(self, "phase", float(self.phase))
        object.__setattr__(self, "state", int(self.state))
        if self.state < 0:
            raise BasisError("electronic state index must be >= 0")
        n = self.position.size
        if self.momentum.size != n or self.widths.size != n:
            raise BasisError("position, momentum and widths must have equal lengths")
        if not np.all(self.widths > 0):
            raise BasisError("widths must be strictly positive")

    @property
    def ndof(self) -> int:
        return self.position.size


def evaluate_tbf(tbf: FrozenGaussian, point) -> complex:
    """Evaluate one TBF at a configuration-space point.

    Multiplicative over DOFs; the global phase factor exp(i*gamma) is
    applied once.
    """
    x = np.asarray(point, dtype=float)
    if x.shape != (tbf.ndof,):
        raise BasisError(
            f"point has shape {x.shape}, expected ({tbf.ndof},)")
    dx = x - tbf.position
    prefactor = np.prod((2.0 * tbf.widths / np.pi) ** 0.25)
    exponent = np.sum(-tbf.widths * dx * dx + 1j * tbf.momentum * dx)
    return complex(prefactor * np.exp(1j * tbf.phase + exponent))


@dataclass(frozen=True)
class BasisSet:
    """Ordered collection of TBFs sharing per-DOF widths and masses.

    The TBF ordering is stable and defines the row/column indices of every
    matrix built over the basis.
    """

    tbfs: tuple[FrozenGaussian, ...]
    masses: np.ndarray
    n_states: int

    def __post_init__(self):
        object.__setattr__(self, "tbfs", tuple(self.tbfs))
        object.__setattr__(self, "masses", _readonly_float(self.masses, "masses"))
        object.__setattr__(self, "n_states", int(self.n_states))
        if not self.tbfs:
            raise BasisError("basis set must contain at least one TBF")
        if self.n_states < 1:
            raise BasisError("n_states must be >= 1")
        ndof = self.masses.size
        if not np.all(self.masses > 0):
            raise BasisError("masses must be strictly positive")
        ref_widths = self.tbfs[0].widths
        for k, tbf in enumerate(self.tbfs):
            if tbf.ndof != ndof:
                raise BasisError(f"TBF {k} has {tbf.ndof} DOFs, expected {ndof}")
            if tbf.state >= self.n_states:
                raise BasisError(
                    f"TBF {k} lives on state {tbf.state}, but n_states={self.n_states}")
            if not np.array_equal(tbf.widths, ref_widths):
                raise BasisError("all TBFs in a basis set must share per-DOF widths")

    @property
    def n(self) -> int:
        return len(self.tbfs)

    @property
    def ndof(self) -> int:
        return self.masses.size

    @property
    def widths(self) -> np.ndarray:
        return self.tbfs[0].widths

    @property
    def states(self) -> np.ndarray:
        return np.array([t.state for t in self.tbfs], dtype=int)

    @property
    def positions(self) -> np.ndarray:
        """(N, D) array of TBF centers."""
        return np.array([t.position for t in self.tbfs])

    @property
    def momenta(self) -> np.ndarray:
        return np.array([t.momentum for t in self.tbfs])

    @property
    def phases(self) -> np.ndarray:
        return np.array([t.phase for t in self.tbfs])

    def state_indices(self, state: int) -> np.ndarray:
        return np.flatnonzero(self.states == state)

    def with_centers(self, positions, momenta, phases) -> "BasisSet":
        """New basis set with updated centers/phases, same widths and order."""
        positions = np.asarray(positions, dtype=float)
        momenta = np.asarray(momenta, dtype=float)
        phases = np.asarray(phases, dtype=float)
        if positions.shape != (self.n, self.ndof):
            raise BasisError("positions must have shape (N, D)")
        tbfs = tuple(
            FrozenGaussian(t.state, positions[k], momenta[k], phases[k], t.widths)
            for k, t in enumerate(self.tbfs)
        )
        return BasisSet(tbfs, self.masses, self.n_states)


@dataclass(frozen=True)
class AmplitudeVector:
    """Complex TBF amplitudes in basis-set order.

    The physical norm is C^dag S C, not sum |c|^2, because the basis is
    nonorthogonal.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=complex, copy=True)
        if arr.ndim != 1:
            raise BasisError("amplitudes must be a 1-D complex vector")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class WavefunctionState:
    """Basis set plus amplitudes at one instant of time."""

    basis: BasisSet
    amplitudes: AmplitudeVector
    time: float = 0.0

    def __post_init__(self):
        if len(self.amplitudes) != self.basis.n:
            raise BasisError(
                f"{len(self.amplitudes)} amplitudes for {self.basis.n} TBFs")
        object.__setattr__(self, "time", float(self.time))

    def with_arrays(self, positions, momenta, phases, amplitudes, time) -> "WavefunctionState":
        return WavefunctionState(
            self.basis.with_centers(positions, momenta, phases),
            AmplitudeVector(amplitudes),
            time,
        )
