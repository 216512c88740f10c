"""Equations of motion and time propagation.

Two families of center EOM are implemented:

* classical: Rdot = P/m, Pdot = -grad V_I at the center of each TBF;
* quantum:   Rdot_i,rho = 2 lambda_i Im(Z_i,rho),
             Pdot_i,rho = -4 a_rho lambda_i Re(Z_i,rho),

where Z collects the amplitude-weighted first-moment Hamiltonian elements
of the nonorthogonal basis.  The quantum form annihilates the
quantum-energy conservation residual termwise for any per-TBF scale
lambda_i; lambda is anchored at its classical-limit value 1 and optionally
relaxed by minimizing the predicted per-step classical-energy change with
a quadratic penalty.

In both families the amplitudes are co-integrated with

    Cdot^I = -i (S^II)^-1 { (H^II - i Sdot^II) C^I + sum_{J != I} H^IJ C^J }

and the phase follows the Lagrangian rate gdot = sum P^2/(2m) - <V>.
Propagation is fixed-step classical RK4 over all unknowns with matrices
(and lambda) rebuilt at every internal stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .basis import AmplitudeVector, BasisSet, WavefunctionState
from .integrals import MatrixBundle, build_bundle, sdot_matrix

__all__ = [
    "IllConditionedBasisError",
    "PropagationError",
    "LambdaPolicy",
    "EomMode",
    "StateDerivative",
    "StepInfo",
    "regularized_inverse",
    "classical_derivatives",
    "compute_Z",
    "quantum_derivatives",
    "lambda_gains",
    "select_lambda",
    "amplitude_rhs",
    "conservation_residual",
    "step",
    "propagate",
]

S_EIGENVALUE_CUTOFF = 1e-8


class IllConditionedBasisError(RuntimeError):
    """Same-state overlap block is singular beyond regularization."""


class PropagationError(RuntimeError):
    """Non-finite state or unrecoverable failure during a step."""


# ---------------------------------------------------------------------------
# Modes and policies


@dataclass(frozen=True)
class LambdaPolicy:
    """How the per-TBF quantum EOM scale lambda is chosen.

    ``fixed_one`` pins lambda_i = 1 (the classical-limit value).
    ``error_function`` minimizes the predicted squared per-step change of
    the per-TBF classical energies plus a quadratic penalty anchoring
    lambda at 1; ``shared`` minimizes over a single scalar lambda instead
    of one per TBF.
    """

    kind: str = "fixed_one"  # fixed_one | error_function
    penalty_weight: float | None = None  # None: 1e-2 (dt max|g|)^2
    bounds: tuple[float, float] = (0.2, 5.0)
    shared: bool = False

    def __post_init__(self):
        if self.kind not in ("fixed_one", "error_function"):
            raise ValueError(f"unknown lambda policy {self.kind!r}")
        lo, hi = self.bounds
        if not (lo <= 1.0 <= hi):
            raise ValueError("lambda bounds must contain 1")


@dataclass(frozen=True)
class EomMode:
    """Propagation mode: classical, quantum, or auto-switching.

    In auto mode each step is first taken classically; if that trial step
    would leave the monitored energy (total quantum energy by default,
    weighted total classical energy optionally) more than ``delta`` away
    from its run-start value, relative to that value's magnitude, the step
    is redone from its start with the quantum EOM.
    """

    kind: str  # classical | quantum | auto
    lambda_policy: LambdaPolicy = LambdaPolicy()
    delta: float | None = None
    monitor: str = "quantum"  # quantum | classical

    def __post_init__(self):
        if self.kind not in ("classical", "quantum", "auto"):
            raise ValueError(f"unknown EOM mode {self.kind!r}")
        if self.kind == "auto":
            if self.delta is None or not self.delta > 0:
                raise ValueError("auto mode requires delta > 0")
            if self.monitor not in ("classical", "quantum"):
                raise ValueError(f"unknown auto monitor {self.monitor!r}")

    @classmethod
    def classical(cls) -> "EomMode":
        return cls("classical")

    @classmethod
    def quantum(cls, lambda_policy: LambdaPolicy | None = None) -> "EomMode":
        return cls("quantum", lambda_policy or LambdaPolicy())

    @classmethod
    def auto(cls, delta: float, lambda_policy: LambdaPolicy | None = None,
             monitor: str = "quantum") -> "EomMode":
        return cls("auto", lambda_policy or LambdaPolicy(), delta, monitor)


@dataclass
class StateDerivative:
    """Time derivatives of all propagated unknowns."""

    rdot: np.ndarray  # (N, D)
    pdot: np.ndarray  # (N, D)
    gdot: np.ndarray  # (N,)
    cdot: np.ndarray | None = None  # (N,) complex


@dataclass
class StepInfo:
    """What one accepted step actually did."""

    kind: str  # classical | quantum
    switched: bool = False
    monitor_change: float | None = None
    monitor_ref: float | None = None
    lambdas: np.ndarray | None = None


# ---------------------------------------------------------------------------
# Linear algebra


def _worst_pair(S: np.ndarray, idx: np.ndarray) -> tuple[int, int]:
    n = idx.size
    best = (int(idx[0]), int(idx[min(1, n - 1)]))
    top = -1.0
    for a in range(n):
        for b in range(a + 1, n):
            mag = abs(S[idx[a], idx[b]])
            if mag > top:
                top = mag
                best = (int(idx[a]), int(idx[b]))
    return best


def regularized_inverse(block: np.ndarray, S_full: np.ndarray | None = None,
                        idx: np.ndarray | None = None) -> np.ndarray:
    """Pseudo-inverse of a Hermitian overlap block.

    Eigenvalues below ``S_EIGENVALUE_CUTOFF`` times the largest one are
    discarded (coalescing Gaussians make the block numerically singular).
    Raises with the most-overlapping TBF pair named if nothing survives.
    """
    w, v = np.linalg.eigh(block)
    wmax = float(w.max(initial=0.0))
    keep = w > S_EIGENVALUE_CUTOFF * wmax
    if wmax <= 0.0 or not np.any(keep):
        pair = ""
        if S_full is not None and idx is not None and idx.size > 1:
            i, j = _worst_pair(S_full, idx)
            pair = f" (worst pair: TBFs {i} and {j})"
        raise IllConditionedBasisError(
            f"overlap block singular beyond regularization{pair}")
    vk = v[:, keep]
    return (vk / w[keep]) @ vk.conj().T


# ---------------------------------------------------------------------------
# Derivative pieces


def _mean_potentials(state: WavefunctionState, hamiltonian,
                     bundle: MatrixBundle | None) -> np.ndarray:
    """Diagonal potential expectations <chi_i|V_II|chi_i>."""
    basis = state.basis
    if bundle is not None:
        momenta = basis.momenta
        t_diag = np.sum(
            (momenta**2 + basis.widths[None, :]) / (2.0 * basis.masses[None, :]),
            axis=1)
        return bundle.H.diagonal().real - t_diag
    from .integrals import potential_me
    out = np.empty(basis.n)
    for i, tbf in enumerate(basis.tbfs):
        out[i] = potential_me(tbf, tbf, hamiltonian.block(tbf.state, tbf.state)).real
    return out


def _phase_rates(state: WavefunctionState, hamiltonian,
                 bundle: MatrixBundle | None) -> np.ndarray:
    basis = state.basis
    kin = np.sum(basis.momenta**2 / (2.0 * basis.masses[None, :]), axis=1)
    return kin - _mean_potentials(state, hamiltonian, bundle)


def classical_derivatives(state: WavefunctionState, hamiltonian,
                          bundle: MatrixBundle | None = None) -> StateDerivative:
    """Classical EOM for centers and phases (amplitudes not included)."""
    basis = state.basis
    rdot = basis.momenta / basis.masses[None, :]
    pdot = np.empty_like(rdot)
    for i, tbf in enumerate(basis.tbfs):
        pdot[i] = -hamiltonian.gradient(tbf.state, tbf.position)
    return StateDerivative(rdot, pdot, _phase_rates(state, hamiltonian, bundle))


def compute_Z(state: WavefunctionState, bundle: MatrixBundle) -> np.ndarray:
    """Per-TBF, per-DOF Z vector driving the quantum EOM.

    Z_i,rho = sum_j c_i^* (H10 - S10 S^-1 H)_ij c_j with the sum restricted
    to TBFs on the same electronic state as TBF i.
    """
    basis = state.basis
    c = state.amplitudes.values
    Z = np.zeros((basis.n, basis.ndof), dtype=complex)
    for state_idx in np.unique(basis.states):
        idx = basis.state_indices(state_idx)
        sb = bundle.S[np.ix_(idx, idx)]
        hb = bundle.H[np.ix_(idx, idx)]
        sinv = regularized_inverse(sb, bundle.S, idx)
        m = sinv @ hb
        cb = c[idx]
        for rho in range(basis.ndof):
            g = bundle.H10[np.ix_(idx, idx)][:, :, rho] \
                - bundle.S10[np.ix_(idx, idx)][:, :, rho] @ m
            Z[idx, rho] = np.conj(cb) * (g @ cb)
    return Z


def quantum_derivatives(state: WavefunctionState, bundle: MatrixBundle,
                        lambdas, hamiltonian=None,
                        Z: np.ndarray | None = None) -> StateDerivative:
    """Quantum EOM for centers and phases given per-TBF lambda scales."""
    if Z is None:
        Z = compute_Z(state, bundle)
    lam = np.asarray(lambdas, dtype=float).reshape(-1, 1)
    widths = state.basis.widths[None, :]
    rdot = 2.0 * lam * Z.imag
    pdot = -4.0 * widths * lam * Z.real
    return StateDerivative(rdot, pdot,
                           _phase_rates(state, hamiltonian, bundle))


def lambda_gains(state: WavefunctionState, bundle: MatrixBundle, hamiltonian,
                 Z: np.ndarray | None = None) -> np.ndarray:
    """Classical-energy rate per unit lambda for each TBF.

    dE_i^cl/dt = lambda_i * g_i with
    g_i = sum_rho [ dV/dR_i,rho * 2 Im Z_i,rho - (P_i,rho/m_rho) 4 a_rho Re Z_i,rho ].
    """
    if Z is None:
        Z = compute_Z(state, bundle)
    basis = state.basis
    g = np.zeros(basis.n)
    widths = basis.widths
    for i, tbf in enumerate(basis.tbfs):
        grad = hamiltonian.gradient(tbf.state, tbf.position)
        g[i] = float(np.sum(grad * 2.0 * Z[i].imag
                            - (tbf.momentum / basis.masses)
                            * 4.0 * widths * Z[i].real))
    return g


def select_lambda(state: WavefunctionState, bundle: MatrixBundle, dt: float,
                  policy: LambdaPolicy, hamiltonian,
                  Z: np.ndarray | None = None) -> np.ndarray:
    """Per-TBF lambda minimizing predicted classical-energy fluctuation.

    The linearized per-step energy change dE_i = dt lambda_i g_i enters a
    quadratic objective with penalty w (lambda_i - 1)^2, whose minimizer is
    lambda_i = w / (w + (dt g_i)^2), clamped to the policy bounds.  A
    degenerate objective (all gains zero) falls back to lambda = 1.
    """
    n = state.basis.n
    if policy.kind == "fixed_one":
        return np.ones(n)
    g = lambda_gains(state, bundle, hamiltonian, Z)
    gmax = float(np.max(np.abs(g)))
    if gmax == 0.0:
        return np.ones(n)
    w = policy.penalty_weight
    if w is None:
        w = 1e-2 * (dt * gmax) ** 2
    if w <= 0.0:
        return np.ones(n)
    if policy.shared:
        lam = float(n * w / (n * w + dt * dt * float(np.sum(g * g))))
        lams = np.full(n, lam)
    else:
        lams = w / (w + (dt * g) ** 2)
    lo, hi = policy.bounds
    return np.clip(lams, lo, hi)


def amplitude_rhs(state: WavefunctionState, bundle: MatrixBundle) -> np.ndarray:
    """Amplitude time derivative in the moving nonorthogonal basis."""
    if bundle.s_dot is None:
        raise ValueError("bundle.s_dot must be filled before amplitude_rhs")
    basis = state.basis
    c = state.amplitudes.values
    cdot = np.zeros(basis.n, dtype=complex)
    for state_idx in np.unique(basis.states):
        idx = basis.state_indices(state_idx)
        sb = bundle.S[np.ix_(idx, idx)]
        sinv = regularized_inverse(sb, bundle.S, idx)
        rhs = (bundle.H[np.ix_(idx, idx)]
               - 1j * bundle.s_dot[np.ix_(idx, idx)]) @ c[idx]
        for other in np.unique(basis.states):
            if other == state_idx:
                continue
            jdx = basis.state_indices(other)
            rhs = rhs + bundle.H[np.ix_(idx, jdx)] @ c[jdx]
        cdot[idx] = -1j * (sinv @ rhs)
    return cdot


def conservation_residual(state: WavefunctionState, bundle: MatrixBundle,
                          derivative: StateDerivative,
                          Z: np.ndarray | None = None) -> float:
    """Quantum-energy conservation residual for given center velocities.

    sum_i sum_rho (4 a_rho Rdot_i,rho Re Z_i,rho + 2 Pdot_i,rho Im Z_i,rho);
    identically zero under the quantum EOM, generically nonzero under the
    classical EOM with overlapping TBFs on an anharmonic surface.
    """
    if Z is None:
        Z = compute_Z(state, bundle)
    widths = state.basis.widths[None, :]
    return float(np.sum(4.0 * widths * derivative.rdot * Z.real
                        + 2.0 * derivative.pdot * Z.imag))


# ---------------------------------------------------------------------------
# Full derivative and RK4 stepping


def _full_derivative(state: WavefunctionState, hamiltonian, kind: str,
                     policy: LambdaPolicy, dt: float):
    """Derivative of every unknown; returns (derivative, bundle, Z, lambdas)."""
    bundle = build_bundle(state.basis, hamiltonian)
    Z = None
    lambdas = None
    if kind == "classical":
        deriv = classical_derivatives(state, hamiltonian, bundle)
    else:
        Z = compute_Z(state, bundle)
        lambdas = select_lambda(state, bundle, dt, policy, hamiltonian, Z)
        deriv = quantum_derivatives(state, bundle, lambdas, hamiltonian, Z)
    bundle.s_dot = sdot_matrix(bundle, deriv.rdot, deriv.pdot, deriv.gdot)
    deriv.cdot = amplitude_rhs(state, bundle)
    return deriv, bundle, Z, lambdas


def _advance(state: WavefunctionState, deriv: StateDerivative, h: float,
             time: float) -> WavefunctionState:
    basis = state.basis
    return state.with_arrays(
        basis.positions + h * deriv.rdot,
        basis.momenta + h * deriv.pdot,
        basis.phases + h * deriv.gdot,
        state.amplitudes.values + h * deriv.cdot,
        time,
    )


def _rk4(state: WavefunctionState, dt: float, hamiltonian, kind: str,
         policy: LambdaPolicy) -> tuple[WavefunctionState, np.ndarray | None]:
    t0 = state.time
    k1, _, _, lam = _full_derivative(state, hamiltonian, kind, policy, dt)
    k2 = _full_derivative(_advance(state, k1, 0.5 * dt, t0 + 0.5 * dt),
                          hamiltonian, kind, policy, dt)[0]
    k3 = _full_derivative(_advance(state, k2, 0.5 * dt, t0 + 0.5 * dt),
                          hamiltonian, kind, policy, dt)[0]
    k4 = _full_derivative(_advance(state, k3, dt, t0 + dt),
                          hamiltonian, kind, policy, dt)[0]
    basis = state.basis
    sixth = dt / 6.0
    new = state.with_arrays(
        basis.positions + sixth * (k1.rdot + 2 * k2.rdot + 2 * k3.rdot + k4.rdot),
        basis.momenta + sixth * (k1.pdot + 2 * k2.pdot + 2 * k3.pdot + k4.pdot),
        basis.phases + sixth * (k1.gdot + 2 * k2.gdot + 2 * k3.gdot + k4.gdot),
        state.amplitudes.values
        + sixth * (k1.cdot + 2 * k2.cdot + 2 * k3.cdot + k4.cdot),
        t0 + dt,
    )
    return new, lam


def _monitor_energy(state: WavefunctionState, hamiltonian, which: str) -> float:
    from .observables import classical_energy, quantum_energy
    bundle = build_bundle(state.basis, hamiltonian)
    if which == "quantum":
        return quantum_energy(state, bundle)
    return classical_energy(state, hamiltonian, bundle)[1]


def _check_finite(state: WavefunctionState):
    basis = state.basis
    ok = (np.all(np.isfinite(basis.positions)) and np.all(np.isfinite(basis.momenta))
          and np.all(np.isfinite(basis.phases))
          and np.all(np.isfinite(state.amplitudes.values)))
    if not ok:
        raise PropagationError(f"non-finite state at t={state.time:.6g}")


def step(state: WavefunctionState, dt: float, mode: EomMode,
         hamiltonian, monitor_ref: float | None = None
         ) -> tuple[WavefunctionState, StepInfo]:
    """One fixed-step RK4 step under the requested EOM mode.

    Auto mode takes the step classically first; if the monitored energy of
    the trial state has drifted more than ``delta`` away from the reference
    value ``monitor_ref`` (captured at the start of the run and never
    updated), relative to the reference magnitude, the step is redone from
    its start with the quantum EOM.  Either way each accepted step is a
    pure RK4 step of a single vector field.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if mode.kind == "classical":
        new, _ = _rk4(state, dt, hamiltonian, "classical", mode.lambda_policy)
        _check_finite(new)
        return new, StepInfo("classical")
    if mode.kind == "quantum":
        new, lam = _rk4(state, dt, hamiltonian, "quantum", mode.lambda_policy)
        _check_finite(new)
        return new, StepInfo("quantum", lambdas=lam)
    # auto
    if monitor_ref is None:
        monitor_ref = _monitor_energy(state, hamiltonian, mode.monitor)
    scale = max(abs(monitor_ref), np.finfo(float).tiny)
    trial, _ = _rk4(state, dt, hamiltonian, "classical", mode.lambda_policy)
    _check_finite(trial)
    change = abs(_monitor_energy(trial, hamiltonian, mode.monitor)
                 - monitor_ref) / scale
    if change <= mode.delta:
        return trial, StepInfo("classical", monitor_change=change,
                               monitor_ref=monitor_ref)
    redo, lam = _rk4(state, dt, hamiltonian, "quantum", mode.lambda_policy)
    _check_finite(redo)
    return redo, StepInfo("quantum", switched=True, monitor_change=change,
                          monitor_ref=monitor_ref, lambdas=lam)


def propagate(state: WavefunctionState, dt: float, n_steps: int, mode: EomMode,
              hamiltonian) -> Iterator[tuple[int, WavefunctionState, StepInfo]]:
    """Generator over accepted steps: yields (step_index, state, info).

    The initial state is yielded first with index 0 and a synthetic info
    record matching the mode's default branch.
    """
    initial_kind = "quantum" if mode.kind == "quantum" else "classical"
    yield 0, state, StepInfo(initial_kind)
    current = state
    ref: float | None = None
    for k in range(1, n_steps + 1):
        current, info = step(current, dt, mode, hamiltonian, monitor_ref=ref)
        ref = info.monitor_ref
        yield k, current, info
