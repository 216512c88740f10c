"""Closed-form bra-ket matrix elements over frozen Gaussians.

Every operator needed at runtime is either the kinetic energy or a
``GaussianPolynomialOperator`` (a sum of coefficient * multivariate
monomial * Gaussian envelope terms).  The product of a bra Gaussian, a ket
Gaussian and an optional envelope is itself a Gaussian, so all matrix
elements reduce to even moments of a single complex-shifted Gaussian:

    int u^k exp(-A u^2) du = (k-1)!! / (2A)^(k/2) * sqrt(pi/A)   (k even)

after completing the square and binomially expanding each monomial
around the complex product center.  This is exact for any polynomial
order, which the quartic double-well term requires.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet, FrozenGaussian

__all__ = [
    "IntegralError",
    "GaussianPolynomialOperator",
    "MatrixBundle",
    "overlap",
    "kinetic",
    "potential_me",
    "moment",
    "sdot_right",
    "hamiltonian_moment_10",
    "hamiltonian_moment_10_fd",
    "build_bundle",
    "sdot_matrix",
]


class IntegralError(ValueError):
    """Incompatible bra/ket pair or unsupported matrix element."""


# ---------------------------------------------------------------------------
# Operators


@dataclass(frozen=True)
class _Term:
    coefficient: float
    powers: tuple[int, ...]
    envelope_widths: tuple[float, ...]
    envelope_centers: tuple[float, ...]


class GaussianPolynomialOperator:
    """Sum of polynomial-times-Gaussian terms over configuration space.

    Each term represents

        coeff * prod_rho (x_rho - c_rho)^p_rho * exp(-a_rho (x_rho - c_rho)^2)

    with a_rho >= 0 (zero width means a pure polynomial factor).  All model
    potentials and diabatic couplings used here are in this class, so every
    matrix element has a closed form.
    """

    def __init__(self, ndof: int, terms):
        self.ndof = int(ndof)
        parsed = []
        for coeff, powers, env_widths, env_centers in terms:
            powers = tuple(int(p) for p in powers)
            env_widths = tuple(float(a) for a in env_widths)
            env_centers = tuple(float(c) for c in env_centers)
            if not (len(powers) == len(env_widths) == len(env_centers) == self.ndof):
                raise IntegralError("term shape does not match operator DOF count")
            if any(p < 0 for p in powers):
                raise IntegralError("monomial exponents must be >= 0")
            if any(a < 0 for a in env_widths):
                raise IntegralError("envelope widths must be >= 0")
            parsed.append(_Term(float(coeff), powers, env_widths, env_centers))
        self.terms = tuple(parsed)

    @classmethod
    def constant(cls, ndof: int, value: float) -> "GaussianPolynomialOperator":
        zeros = (0.0,) * ndof
        return cls(ndof, [(value, (0,) * ndof, zeros, zeros)])

    def __call__(self, x):
        """Pointwise evaluation; x has shape (..., ndof)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.ndof:
            raise IntegralError(f"point has {x.shape[-1]} DOFs, operator has {self.ndof}")
        out = np.zeros(x.shape[:-1])
        for t in self.terms:
            val = np.full(x.shape[:-1], t.coefficient)
            for rho in range(self.ndof):
                u = x[..., rho] - t.envelope_centers[rho]
                if t.powers[rho]:
                    val = val * u ** t.powers[rho]
                if t.envelope_widths[rho]:
                    val = val * np.exp(-t.envelope_widths[rho] * u * u)
            out = out + val
        return out if out.shape else float(out)

    def gradient(self, x) -> np.ndarray:
        """Pointwise gradient; returns shape (..., ndof)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (self.ndof,))
        for t in self.terms:
            factors = []
            for rho in range(self.ndof):
                u = x[..., rho] - t.envelope_centers[rho]
                f = np.ones(x.shape[:-1])
                if t.powers[rho]:
                    f = f * u ** t.powers[rho]
                if t.envelope_widths[rho]:
                    f = f * np.exp(-t.envelope_widths[rho] * u * u)
                factors.append(f)
            for rho in range(self.ndof):
                u = x[..., rho] - t.envelope_centers[rho]
                a = t.envelope_widths[rho]
                p = t.powers[rho]
                df = -2.0 * a * u * factors[rho]
                if p:
                    df = df + p * u ** (p - 1) * (
                        np.exp(-a * u * u) if a else np.ones(x.shape[:-1]))
                rest = np.full(x.shape[:-1], t.coefficient)
                for sig in range(self.ndof):
                    if sig != rho:
                        rest = rest * factors[sig]
                out[..., rho] += rest * df
        return out


# ---------------------------------------------------------------------------
# 1-D Gaussian product engine


class _PairDof:
    """Product-Gaussian data for one DOF of an ordered (bra, ket) pair."""

    __slots__ = ("alpha", "ri", "pi", "rj", "pj", "a0", "b0", "c0", "norm")

    def __init__(self, alpha, ri, pi, rj, pj):
        self.alpha = alpha
        self.ri = ri
        self.pi = pi
        self.rj = rj
        self.pj = pj
        # conj(bra) * ket = exp(-a0 x^2 + b0 x + c0) up to normalization
        self.a0 = 2.0 * alpha
        self.b0 = complex(2.0 * alpha * (ri + rj), pj - pi)
        self.c0 = complex(-alpha * (ri * ri + rj * rj), pi * ri - pj * rj)
        self.norm = math.sqrt(2.0 * alpha / math.pi)

    def integral(self, envelope=None, polys=()):
        """Normalized 1-D integral with optional extra envelope and monomials.

        ``envelope`` is a (width, center) pair; ``polys`` is a sequence of
        (center, power) monomial factors.
        """
        a = self.a0
        b = self.b0
        c = self.c0
        if envelope is not None:
            ae, ce = envelope
            if ae:
                a = a + ae
                b = b + 2.0 * ae * ce
                c = c - ae * ce * ce
        mu = b / (2.0 * a)
        pref = self.norm * math.sqrt(math.pi / a)
        value = pref * cmath.exp(c + 0.5 * b * mu)
        active = [(ctr, p) for ctr, p in polys if p]
        if not active:
            return value
        coeffs = [1.0 + 0.0j]
        for center, power in active:
            d = mu - center
            factor = [math.comb(power, k) * d ** (power - k) for k in range(power + 1)]
            new = [0.0 + 0.0j] * (len(coeffs) + power)
            for i, ci in enumerate(coeffs):
                if ci == 0.0:
                    continue
                for k, fk in enumerate(factor):
                    new[i + k] += ci * fk
            coeffs = new
        inv2a = 1.0 / (2.0 * a)
        total = 0.0 + 0.0j
        mom = 1.0
        for k in range(0, len(coeffs), 2):
            total += coeffs[k] * mom
            mom *= (k + 1) * inv2a
        return value * total


class PairIntegrals:
    """All closed-form matrix elements for one ordered (bra, ket) TBF pair.

    Per-DOF product-Gaussian data and plain overlap factors are computed
    once and shared across the overlap, kinetic, potential and moment
    elements of the pair.
    """

    def __init__(self, bra: FrozenGaussian, ket: FrozenGaussian):
        if bra.ndof != ket.ndof:
            raise IntegralError("bra and ket have different DOF counts")
        if not np.array_equal(bra.widths, ket.widths):
            raise IntegralError("bra and ket widths must match per DOF")
        self.bra = bra
        self.ket = ket
        self.ndof = bra.ndof
        self.phase = cmath.exp(1j * (ket.phase - bra.phase))
        self.dofs = [
            _PairDof(bra.widths[r], bra.position[r], bra.momentum[r],
                     ket.position[r], ket.momentum[r])
            for r in range(self.ndof)
        ]
        self._ov = [d.integral() for d in self.dofs]

    def _prod_except(self, rho: int, exclude2: int = -1) -> complex:
        out = 1.0 + 0.0j
        for r, v in enumerate(self._ov):
            if r != rho and r != exclude2:
                out *= v
        return out

    def overlap(self) -> complex:
        out = self.phase
        for v in self._ov:
            out *= v
        return out

    def _kinetic_dof(self, rho: int, mass: float, extra=()):
        """<bra| P_rho^2/(2 m) |ket> factor on DOF rho (other DOFs excluded).

        -d^2/dx^2 acting on the ket Gaussian gives the quadratic polynomial
        2a + P^2 + 4iaP(x-R) - 4a^2(x-R)^2 around the ket center.
        """
        d = self.dofs[rho]
        a = d.alpha
        base = [(d.rj, 0)]
        i0 = d.integral(polys=extra) if extra else self._ov[rho]
        i1 = d.integral(polys=(*extra, (d.rj, 1)))
        i2 = d.integral(polys=(*extra, (d.rj, 2)))
        return ((2.0 * a + d.pj * d.pj) * i0 + 4j * a * d.pj * i1
                - 4.0 * a * a * i2) / (2.0 * mass)

    def kinetic(self, masses) -> complex:
        total = 0.0 + 0.0j
        for rho in range(self.ndof):
            total += self._kinetic_dof(rho, masses[rho]) * self._prod_except(rho)
        return self.phase * total

    def _term_value(self, term: _Term, extra_dof: int = -1, extra=()):
        """One operator term, with optional extra monomials on one DOF."""
        out = term.coefficient + 0.0j
        for rho in range(self.ndof):
            env = None
            if term.envelope_widths[rho]:
                env = (term.envelope_widths[rho], term.envelope_centers[rho])
            polys = []
            if term.powers[rho]:
                polys.append((term.envelope_centers[rho], term.powers[rho]))
            if rho == extra_dof:
                polys.extend(extra)
            if env is None and not polys:
                out *= self._ov[rho]
            else:
                out *= self.dofs[rho].integral(envelope=env, polys=polys)
        return out

    def potential(self, op: GaussianPolynomialOperator) -> complex:
        if op.ndof != self.ndof:
            raise IntegralError("operator DOF count does not match the pair")
        total = 0.0 + 0.0j
        for term in op.terms:
            total += self._term_value(term)
        return self.phase * total

    def moment(self, op, m: int, n: int, dof: int) -> complex:
        """<bra| (x_d - Ri_d)^m Op (x_d - Rj_d)^n |ket> with Op optional."""
        if m < 0 or n < 0:
            raise IntegralError("moment orders must be >= 0")
        if not 0 <= dof < self.ndof:
            raise IntegralError("moment DOF index out of range")
        d = self.dofs[dof]
        extra = ((d.ri, m), (d.rj, n))
        if op is None:
            return self.phase * d.integral(polys=extra) * self._prod_except(dof)
        if op.ndof != self.ndof:
            raise IntegralError("operator DOF count does not match the pair")
        total = 0.0 + 0.0j
        for term in op.terms:
            total += self._term_value(term, extra_dof=dof, extra=extra)
        return self.phase * total

    def hamiltonian_moment_10(self, masses, potential, dof: int) -> complex:
        """<bra| (x_d - Ri_d) (T + V) |ket> for one DOF index d."""
        d = self.dofs[dof]
        extra = ((d.ri, 1),)
        total = 0.0 + 0.0j
        for rho in range(self.ndof):
            if rho == dof:
                total += self._kinetic_dof(rho, masses[rho], extra=extra) \
                    * self._prod_except(rho)
            else:
                total += self._kinetic_dof(rho, masses[rho]) \
                    * d.integral(polys=extra) * self._prod_except(rho, dof)
        if potential is not None:
            for term in potential.terms:
                total += self._term_value(term, extra_dof=dof, extra=extra)
        return self.phase * total


# ---------------------------------------------------------------------------
# Scalar operation surface


def overlap(bra: FrozenGaussian, ket: FrozenGaussian) -> complex:
    """Exact closed-form overlap <bra|ket>, Hermitian by construction."""
    return PairIntegrals(bra, ket).overlap()


def kinetic(bra: FrozenGaussian, ket: FrozenGaussian, masses) -> complex:
    """Exact <bra| sum_rho P_rho^2/(2 m_rho) |ket>."""
    return PairIntegrals(bra, ket).kinetic(np.asarray(masses, dtype=float))


def potential_me(bra: FrozenGaussian, ket: FrozenGaussian,
                 op: GaussianPolynomialOperator) -> complex:
    """Closed-form matrix element of a Gaussian-polynomial operator."""
    return PairIntegrals(bra, ket).potential(op)


def moment(bra: FrozenGaussian, ket: FrozenGaussian, op, m: int, n: int,
           dof: int) -> complex:
    """Mixed moment <bra|(x_d - Ri_d)^m Op (x_d - Rj_d)^n|ket>.

    ``op`` may be None (identity) or a GaussianPolynomialOperator.  Any
    nonnegative orders are supported by the moment recursion.
    """
    return PairIntegrals(bra, ket).moment(op, m, n, dof)


def sdot_right(bra: FrozenGaussian, ket: FrozenGaussian, ket_position_rate,
               ket_momentum_rate, ket_phase_rate: float) -> complex:
    """Right-acting overlap time derivative <bra| d/dt ket>.

    Zero across electronic states.  For same-state pairs,

        <i|d/dt j> = S_ij (-i sum_rho Rdot_j P_j + i gdot_j)
                     + sum_rho S01_ij,rho (2 a_rho Rdot_j,rho + i Pdot_j,rho)

    where S01 is the first moment around the ket center.
    """
    if bra.state != ket.state:
        return 0.0 + 0.0j
    pair = PairIntegrals(bra, ket)
    rdot = np.asarray(ket_position_rate, dtype=float)
    pdot = np.asarray(ket_momentum_rate, dtype=float)
    s = pair.overlap()
    out = s * (-1j * float(np.dot(rdot, ket.momentum)) + 1j * float(ket_phase_rate))
    for rho in range(pair.ndof):
        s01 = pair.moment(None, 0, 1, rho)
        out += s01 * (2.0 * ket.widths[rho] * rdot[rho] + 1j * pdot[rho])
    return out


def hamiltonian_moment_10(bra: FrozenGaussian, ket: FrozenGaussian,
                          hamiltonian, dof: int) -> complex:
    """First-moment Hamiltonian element <bra|(x_d - Ri_d) H |ket>.

    ``hamiltonian`` must expose ``masses`` and ``block(I, J)``; the kinetic
    part contributes only for same-state pairs.
    """
    pair = PairIntegrals(bra, ket)
    block = hamiltonian.block(bra.state, ket.state)
    if bra.state == ket.state:
        return pair.hamiltonian_moment_10(hamiltonian.masses, block, dof)
    if block is None:
        return 0.0 + 0.0j
    d = pair.dofs[dof]
    total = 0.0 + 0.0j
    for term in block.terms:
        total += pair._term_value(term, extra_dof=dof, extra=((d.ri, 1),))
    return pair.phase * total


def _h_element(pair: PairIntegrals, hamiltonian) -> complex:
    block = hamiltonian.block(pair.bra.state, pair.ket.state)
    out = 0.0 + 0.0j
    if pair.bra.state == pair.ket.state:
        out += pair.kinetic(hamiltonian.masses)
    if block is not None:
        out += pair.potential(block)
    return out


def hamiltonian_moment_10_fd(bra: FrozenGaussian, ket: FrozenGaussian,
                             hamiltonian, dof: int, step: float = 1e-6) -> complex:
    """Finite-difference cross-check route for the H^10 moment.

    Uses the derivative relation

        dH_ij/dRi_d = 2 a_d H10_ij,d + i Pi_d H_ij

    with a central difference on the bra center.
    """
    def h_at(shift):
        pos = bra.position.copy()
        pos[dof] += shift
        shifted = FrozenGaussian(bra.state, pos, bra.momentum, bra.phase, bra.widths)
        return _h_element(PairIntegrals(shifted, ket), hamiltonian)

    dh = (h_at(step) - h_at(-step)) / (2.0 * step)
    h = _h_element(PairIntegrals(bra, ket), hamiltonian)
    return (dh - 1j * bra.momentum[dof] * h) / (2.0 * bra.widths[dof])


# ---------------------------------------------------------------------------
# Matrix bundle


@dataclass
class MatrixBundle:
    """All nonorthogonal-basis tensors needed by one propagation stage.

    S and H are Hermitian by construction (upper triangle conjugate-
    mirrored); S10/H10 hold first moments around the bra center, one slab
    per DOF; S10 has an exactly zero diagonal.  ``s_dot`` is the
    right-acting overlap derivative and is filled only once center
    velocities are known.
    """

    basis: BasisSet
    S: np.ndarray
    H: np.ndarray
    S10: np.ndarray
    H10: np.ndarray
    s_dot: np.ndarray | None = None


def build_bundle(basis: BasisSet, hamiltonian, center_velocities=None,
                 momentum_rates=None, phase_rates=None) -> MatrixBundle:
    """Assemble S, H, S10 and H10 over a basis set.

    If center velocities, momentum rates and phase rates are supplied the
    right-acting overlap derivative is filled as well.
    """
    n = basis.n
    ndof = basis.ndof
    states = basis.states
    S = np.zeros((n, n), dtype=complex)
    H = np.zeros((n, n), dtype=complex)
    S10 = np.zeros((n, n, ndof), dtype=complex)
    H10 = np.zeros((n, n, ndof), dtype=complex)
    for i in range(n):
        for j in range(n):
            pair = PairIntegrals(basis.tbfs[i], basis.tbfs[j])
            same_state = states[i] == states[j]
            block = hamiltonian.block(states[i], states[j])
            if j >= i:
                if same_state:
                    S[i, j] = pair.overlap()
                    H[i, j] = pair.kinetic(hamiltonian.masses)
                if block is not None:
                    H[i, j] += pair.potential(block)
                if j > i:
                    S[j, i] = S[i, j].conjugate()
                    H[j, i] = H[i, j].conjugate()
                else:
                    S[i, i] = complex(S[i, i].real, 0.0)
                    H[i, i] = complex(H[i, i].real, 0.0)
            for rho in range(ndof):
                if same_state:
                    if i == j:
                        S10[i, j, rho] = 0.0  # first moment vanishes at the center
                    else:
                        S10[i, j, rho] = pair.moment(None, 1, 0, rho)
                    H10[i, j, rho] = pair.hamiltonian_moment_10(
                        hamiltonian.masses, block, rho)
                elif block is not None:
                    d = pair.dofs[rho]
                    val = 0.0 + 0.0j
                    for term in block.terms:
                        val += pair._term_value(term, extra_dof=rho,
                                                extra=((d.ri, 1),))
                    H10[i, j, rho] = pair.phase * val
    bundle = MatrixBundle(basis, S, H, S10, H10)
    if center_velocities is not None:
        bundle.s_dot = sdot_matrix(bundle, center_velocities, momentum_rates,
                                   phase_rates)
    return bundle


def sdot_matrix(bundle: MatrixBundle, center_velocities, momentum_rates,
                phase_rates) -> np.ndarray:
    """Right-acting overlap derivative matrix from stored S and S10.

    Uses S01_ij = conj(S10_ji) per DOF; cross-state entries are zero.
    """
    basis = bundle.basis
    rdot = np.asarray(center_velocities, dtype=float)
    pdot = np.asarray(momentum_rates, dtype=float)
    gdot = np.asarray(phase_rates, dtype=float)
    momenta = basis.momenta
    widths = basis.widths
    states = basis.states
    n = basis.n
    out = np.zeros((n, n), dtype=complex)
    ket_scalar = -1j * np.sum(rdot * momenta, axis=1) + 1j * gdot
    ket_vec = 2.0 * widths[None, :] * rdot + 1j * pdot  # (N, D)
    for j in range(n):
        same = states == states[j]
        out[same, j] = bundle.S[same, j] * ket_scalar[j]
        s01 = np.conj(bundle.S10[j, same, :])  # (n_same, D)
        out[same, j] += s01 @ ket_vec[j]
    return out
