"""Diagnostics recorded along a propagation: energies, weights, norm and
the quantum-energy conservation residual."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import WavefunctionState
from .dynamics import (EomMode, MatrixBundle, StateDerivative,
                       classical_derivatives, compute_Z,
                       conservation_residual, quantum_derivatives,
                       select_lambda)
from .integrals import build_bundle

__all__ = [
    "FrameRecord",
    "quantum_energy",
    "classical_energy",
    "weights",
    "state_populations",
    "frame_columns",
    "make_frame",
]


def quantum_energy(state: WavefunctionState, bundle: MatrixBundle) -> float:
    """Rayleigh quotient Re(C^dag H C) / Re(C^dag S C) of the wavepacket."""
    c = state.amplitudes.values
    norm = float(np.real(np.vdot(c, bundle.S @ c)))
    if norm <= 0.0:
        raise ZeroDivisionError("wavepacket has zero norm")
    return float(np.real(np.vdot(c, bundle.H @ c))) / norm


def classical_energy(state: WavefunctionState, hamiltonian,
                     bundle: MatrixBundle | None = None):
    """Per-TBF center energies and their weight-averaged total.

    E_i = sum_rho P_i,rho^2 / (2 m_rho) + V_I(R_i); the total uses Mulliken
    weights, which sum to one in a nonorthogonal basis.
    """
    basis = state.basis
    per_tbf = np.empty(basis.n)
    for i, tbf in enumerate(basis.tbfs):
        kin = float(np.sum(tbf.momentum**2 / (2.0 * basis.masses)))
        per_tbf[i] = kin + float(hamiltonian.evaluate(tbf.state, tbf.state,
                                                      tbf.position))
    if bundle is None:
        bundle = build_bundle(basis, hamiltonian)
    _, mulliken = weights(state, bundle)
    return per_tbf, float(np.sum(mulliken * per_tbf))


def weights(state: WavefunctionState, bundle: MatrixBundle):
    """Raw |c|^2 weights and Mulliken weights Re(c_i^* (SC)_i) / C^dag S C."""
    c = state.amplitudes.values
    raw = np.abs(c) ** 2
    total_raw = float(raw.sum())
    if total_raw > 0.0:
        raw = raw / total_raw
    sc = bundle.S @ c
    norm = float(np.real(np.vdot(c, sc)))
    mulliken = np.real(np.conj(c) * sc) / norm if norm != 0.0 else np.zeros_like(raw)
    return raw, mulliken


def state_populations(state: WavefunctionState, bundle: MatrixBundle) -> np.ndarray:
    """Per-electronic-state populations (sums of Mulliken weights)."""
    _, mulliken = weights(state, bundle)
    pops = np.zeros(state.basis.n_states)
    for s, w in zip(state.basis.states, mulliken):
        pops[s] += w
    return pops


@dataclass
class FrameRecord:
    """One recorded propagation frame (one CSV row)."""

    time: float
    e_qm: float
    e_cl_total: float
    norm: float
    residual: float
    populations: np.ndarray   # (n_states,)
    e_cl: np.ndarray          # (N,)
    w_raw: np.ndarray         # (N,)
    w_mulliken: np.ndarray    # (N,)
    positions: np.ndarray     # (N, D)
    momenta: np.ndarray       # (N, D)

    def values(self) -> list[float]:
        out = [self.time, self.e_qm, self.e_cl_total, self.norm, self.residual]
        out.extend(self.populations.tolist())
        for i in range(self.e_cl.size):
            out.extend([self.e_cl[i], self.w_raw[i], self.w_mulliken[i]])
            out.extend(self.positions[i].tolist())
            out.extend(self.momenta[i].tolist())
        return out


def frame_columns(n_tbfs: int, ndof: int, n_states: int) -> list[str]:
    """Stable CSV column order; reordering is a breaking schema change."""
    cols = ["time", "e_qm", "e_cl_total", "norm", "residual"]
    cols += [f"pop_state_{s}" for s in range(n_states)]
    for i in range(n_tbfs):
        cols += [f"e_cl_{i}", f"w_raw_{i}", f"w_mull_{i}"]
        cols += [f"r_{i}_{d}" for d in range(ndof)]
        cols += [f"p_{i}_{d}" for d in range(ndof)]
    return cols


def make_frame(state: WavefunctionState, hamiltonian, kind: str,
               dt: float, mode: EomMode) -> FrameRecord:
    """Diagnostics for one state snapshot.

    ``kind`` names the EOM branch whose center velocities enter the
    conservation residual (the branch the last accepted step used).
    """
    bundle = build_bundle(state.basis, hamiltonian)
    Z = compute_Z(state, bundle)
    if kind == "quantum":
        lambdas = select_lambda(state, bundle, dt, mode.lambda_policy,
                                hamiltonian, Z)
        deriv = quantum_derivatives(state, bundle, lambdas, hamiltonian, Z)
    else:
        deriv = classical_derivatives(state, hamiltonian, bundle)
    residual = conservation_residual(state, bundle, deriv, Z)
    per_tbf, total = classical_energy(state, hamiltonian, bundle)
    raw, mulliken = weights(state, bundle)
    c = state.amplitudes.values
    return FrameRecord(
        time=state.time,
        e_qm=quantum_energy(state, bundle),
        e_cl_total=total,
        norm=float(np.real(np.vdot(c, bundle.S @ c))),
        residual=residual,
        populations=state_populations(state, bundle),
        e_cl=per_tbf,
        w_raw=raw,
        w_mulliken=mulliken,
        positions=state.basis.positions,
        momenta=state.basis.momenta,
    )
