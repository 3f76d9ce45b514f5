"""Nonlocal Lamé operators with anisotropic singular and integrable kernels on periodic grids.

Modules: :mod:`kernel` (kernel families), :mod:`symbol` (Fourier matrix
symbols), :mod:`field` (grids, transforms, norms), :mod:`operator` (spectral
and physical-space application), :mod:`solver` (resolvent solves and
estimates), :mod:`wave` (time evolution) and :mod:`cli`.
"""
from .errors import ConfigError, DomainError, NonlocalError, NumericalError, SolverError, UsageError
from .field import GridSpec, VectorField
from .kernel import ConeSpec, IntegrableKernel, Modulation, SingularKernel
from .operator import OperatorHandle, apply_L_spectral
from .solver import solve_resolvent_block, solve_steady
from .wave import energy_ledger, propagate

__version__ = "0.1.0"

__all__ = [
    "ConeSpec", "ConfigError", "DomainError", "GridSpec", "IntegrableKernel", "Modulation",
    "NonlocalError", "NumericalError", "OperatorHandle", "SingularKernel", "SolverError",
    "UsageError", "VectorField", "apply_L_spectral", "energy_ledger", "propagate",
    "solve_resolvent_block", "solve_steady",
]
