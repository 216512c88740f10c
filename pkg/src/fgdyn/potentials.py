"""Model Hamiltonians: 1-D double well and 2-D two-state avoided-crossing
model with a localized diabatic coupling.

Each model is exposed as per-state-pair GaussianPolynomialOperator blocks,
so every matrix element over frozen Gaussians has a closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrals import GaussianPolynomialOperator

__all__ = [
    "ConfigError",
    "DoubleWellParams",
    "FerrettiParams",
    "ModelHamiltonian",
    "double_well",
    "ferretti",
]


class ConfigError(ValueError):
    """Invalid model parameters."""


class ModelHamiltonian:
    """Kinetic masses plus diabatic potential blocks keyed by state pair.

    The coupling block is stored once and referenced for both (I, J) and
    (J, I), which makes the diabatic symmetry structural.
    """

    def __init__(self, masses, n_states: int, blocks):
        self.masses = np.array(masses, dtype=float)
        self.n_states = int(n_states)
        self._blocks = {}
        for (i, j), op in blocks.items():
            self._blocks[(i, j)] = op
            self._blocks[(j, i)] = op

    @property
    def ndof(self) -> int:
        return self.masses.size

    def block(self, i: int, j: int) -> GaussianPolynomialOperator | None:
        return self._blocks.get((i, j))

    def evaluate(self, i: int, j: int, x):
        op = self.block(i, j)
        if op is None:
            x = np.asarray(x, dtype=float)
            return np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0
        return op(x)

    def gradient(self, i: int, x) -> np.ndarray:
        """Gradient of the diagonal surface I at configuration x."""
        op = self.block(i, i)
        if op is None:
            raise ConfigError(f"no diagonal block for state {i}")
        return op.gradient(x)


@dataclass(frozen=True)
class DoubleWellParams:
    """V(R) = V0 + D (R - R0)^4 - C (R - R0)^2.

    Two minima at R0 +/- sqrt(C / 2D), barrier height C^2 / 4D above them.
    """

    V0: float
    D: float
    C: float
    R0: float
    mass: float

    def __post_init__(self):
        if self.D <= 0 or self.C <= 0:
            raise ConfigError("double well requires D > 0 and C > 0")
        if self.mass <= 0:
            raise ConfigError("mass must be positive")

    @property
    def minima(self) -> tuple[float, float]:
        off = np.sqrt(self.C / (2.0 * self.D))
        return (self.R0 - off, self.R0 + off)

    @property
    def barrier_height(self) -> float:
        return self.C * self.C / (4.0 * self.D)


def double_well(params: DoubleWellParams) -> ModelHamiltonian:
    """Single-state double-well Hamiltonian."""
    zeros = (0.0,)
    r0 = (params.R0,)
    op = GaussianPolynomialOperator(1, [
        (params.V0, (0,), zeros, zeros),
        (params.D, (4,), zeros, r0),
        (-params.C, (2,), zeros, r0),
    ])
    return ModelHamiltonian([params.mass], 1, {(0, 0): op})


@dataclass(frozen=True)
class FerrettiParams:
    """Two-state 2-D model of a collinear ABA triatomic.

    V11 and V22 are displaced harmonic surfaces (V22 offset by ``delta``);
    the coupling is gamma_c * Y * exp(-alpha_c (X - X3)^2 - beta_c Y^2).
    kx, ky, delta, alpha_c, beta_c, gamma_c and X3 carry conventional
    defaults; geometry centers X1, X2 and the masses must be supplied.
    """

    X1: float
    X2: float
    mx: float
    my: float
    kx: float = 0.01
    ky: float = 0.1
    delta: float = 0.01
    alpha_c: float = 3.0
    beta_c: float = 1.5
    gamma_c: float = 0.01
    X3: float = 3.0

    def __post_init__(self):
        if self.kx <= 0 or self.ky <= 0:
            raise ConfigError("force constants kx, ky must be positive")
        if self.alpha_c <= 0 or self.beta_c <= 0:
            raise ConfigError("coupling envelope widths must be positive")
        if self.mx <= 0 or self.my <= 0:
            raise ConfigError("masses must be positive")


def ferretti(params: FerrettiParams) -> ModelHamiltonian:
    """Two-state avoided-crossing Hamiltonian with localized coupling."""
    p = params
    zeros = (0.0, 0.0)
    v11 = GaussianPolynomialOperator(2, [
        (0.5 * p.kx, (2, 0), zeros, (p.X1, 0.0)),
        (0.5 * p.ky, (0, 2), zeros, zeros),
    ])
    v22 = GaussianPolynomialOperator(2, [
        (0.5 * p.kx, (2, 0), zeros, (p.X2, 0.0)),
        (0.5 * p.ky, (0, 2), zeros, zeros),
        (p.delta, (0, 0), zeros, zeros),
    ])
    v12 = GaussianPolynomialOperator(2, [
        (p.gamma_c, (0, 1), (p.alpha_c, p.beta_c), (p.X3, 0.0)),
    ])
    return ModelHamiltonian([p.mx, p.my], 2,
                            {(0, 0): v11, (1, 1): v22, (0, 1): v12})
