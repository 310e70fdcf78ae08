"""Conditional spin squeezing of atomic ensembles under continuous homodyne measurement.

The state is the permutation-symmetric collective density matrix, stored as
one complex amplitude per tuple of collective numbers.
"""

__version__ = "0.1.0"

from .dynamics import StepConfig, TrajectoryRecord, run_trajectory, step_em
from .errors import (
    CapacityError,
    ConfigError,
    DomainError,
    IntegrationError,
    OracleIntegrityError,
    ParameterError,
    SingularParameterError,
    SpinSqueezeError,
)
from .index import MultiIndex, flat_index, multi_index, shift_index, state_count
from .noise import WienerPath
from .observables import SpinMoments, spin_moments, squeezing_parameter
from .params import DerivedParams, PhysicalParams, derive_params
from .state import CollectiveState, css_init, hermitian_residual, renormalize, trace

__all__ = [
    "CapacityError",
    "CollectiveState",
    "ConfigError",
    "DerivedParams",
    "DomainError",
    "IntegrationError",
    "MultiIndex",
    "OracleIntegrityError",
    "ParameterError",
    "PhysicalParams",
    "SingularParameterError",
    "SpinMoments",
    "SpinSqueezeError",
    "StepConfig",
    "TrajectoryRecord",
    "WienerPath",
    "css_init",
    "derive_params",
    "flat_index",
    "hermitian_residual",
    "multi_index",
    "renormalize",
    "run_trajectory",
    "shift_index",
    "spin_moments",
    "squeezing_parameter",
    "state_count",
    "step_em",
    "trace",
]
