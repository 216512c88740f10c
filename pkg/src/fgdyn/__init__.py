"""Frozen-Gaussian wavepacket dynamics with quantum-energy-conserving
equations of motion for the Gaussian centers."""

__version__ = "0.1.0"

from .basis import (AmplitudeVector, BasisSet, FrozenGaussian,
                    WavefunctionState, evaluate_tbf)
from .dynamics import EomMode, LambdaPolicy, propagate, step
from .integrals import GaussianPolynomialOperator, MatrixBundle, build_bundle
from .potentials import (DoubleWellParams, FerrettiParams, ModelHamiltonian,
                         double_well, ferretti)
from .sampling import InitialWavepacket, initial_state, wigner_sample

__all__ = [
    "__version__",
    "AmplitudeVector", "BasisSet", "FrozenGaussian", "WavefunctionState",
    "evaluate_tbf",
    "EomMode", "LambdaPolicy", "propagate", "step",
    "GaussianPolynomialOperator", "MatrixBundle", "build_bundle",
    "DoubleWellParams", "FerrettiParams", "ModelHamiltonian",
    "double_well", "ferretti",
    "InitialWavepacket", "initial_state", "wigner_sample",
]
