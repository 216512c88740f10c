"""Gauss-Hermite quadrature matrix elements over frozen Gaussians.

Independent of the closed-form engine: the bra/ket product and any
pointwise operator factor are evaluated on a tensor-product grid centered
on the bra-ket product-Gaussian midpoint.  Intended as a test oracle and
as a slow fallback for black-box potentials.
"""

from __future__ import annotations

import numpy as np

from .basis import FrozenGaussian
from .integrals import IntegralError

__all__ = ["gh_matrix_element", "gh_kinetic_factor", "gh_moment_factor"]


def _grid(bra: FrozenGaussian, ket: FrozenGaussian, order: int):
    """Per-DOF nodes and flattened tensor grid with integration weights."""
    t, w = np.polynomial.hermite.hermgauss(order)
    axes = []
    weights = []
    for rho in range(bra.ndof):
        scale = np.sqrt(2.0 * bra.widths[rho])
        center = 0.5 * (bra.position[rho] + ket.position[rho])
        x = center + t / scale
        # fold the removed Gauss-Hermite weight back into the integrand
        weights.append(w * np.exp(t * t) / scale)
        axes.append(x)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)  # (M, D)
    wmesh = np.meshgrid(*weights, indexing="ij")
    wtot = np.ones(pts.shape[0])
    for wm in wmesh:
        wtot = wtot * wm.ravel()
    return pts, wtot


def _tbf_values(tbf: FrozenGaussian, pts: np.ndarray) -> np.ndarray:
    dx = pts - tbf.position[None, :]
    pref = np.prod((2.0 * tbf.widths / np.pi) ** 0.25)
    expo = np.sum(-tbf.widths[None, :] * dx * dx + 1j * tbf.momentum[None, :] * dx,
                  axis=1)
    return pref * np.exp(1j * tbf.phase + expo)


def gh_matrix_element(bra: FrozenGaussian, ket: FrozenGaussian, factor=None,
                      order: int = 64) -> complex:
    """Quadrature value of <bra| f(x) |ket> for a pointwise factor f.

    ``factor`` is a callable mapping an (M, D) point array to (M,) values
    (complex allowed), or None for the plain overlap.
    """
    if bra.ndof != ket.ndof:
        raise IntegralError("bra and ket have different DOF counts")
    pts, w = _grid(bra, ket, order)
    integrand = np.conj(_tbf_values(bra, pts)) * _tbf_values(ket, pts)
    if factor is not None:
        integrand = integrand * factor(pts)
    return complex(np.sum(w * integrand))


def gh_kinetic_factor(ket: FrozenGaussian, masses):
    """Pointwise factor equal to (T ket)(x) / ket(x).

    Differentiating the ket Gaussian analytically,
    -(1/2m) chi'' / chi = (2a + P^2 + 4iaP(x-R) - 4a^2 (x-R)^2) / (2m).
    """
    masses = np.asarray(masses, dtype=float)

    def factor(pts):
        out = np.zeros(pts.shape[0], dtype=complex)
        for rho in range(ket.ndof):
            a = ket.widths[rho]
            p = ket.momentum[rho]
            u = pts[:, rho] - ket.position[rho]
            out += (2.0 * a + p * p + 4j * a * p * u - 4.0 * a * a * u * u) \
                / (2.0 * masses[rho])
        return out

    return factor


def gh_moment_factor(bra: FrozenGaussian, ket: FrozenGaussian, m: int, n: int,
                     dof: int):
    """Pointwise factor (x_d - Ri_d)^m (x_d - Rj_d)^n."""

    def factor(pts):
        return ((pts[:, dof] - bra.position[dof]) ** m
                * (pts[:, dof] - ket.position[dof]) ** n)

    return factor
