"""Simulation and verification toolkit for regularized Hastings-Levitov growth."""

__version__ = "0.1.0"

from .conformal import (  # noqa: E402
    capacity_from_slit,
    compose_evaluate,
    gamma,
    gamma_tilde,
    rotated_particle_map,
    rotated_particle_map_deriv,
    slit_from_capacity,
    slit_map,
    slit_map_deriv,
    wrap_angle,
)
from .errors import DomainError, HLGrowthError, NumericalFailure, SingularityError  # noqa: E402
from .growth import ClusterState, GrowthParams, ParticleEvent, grow  # noqa: E402

__all__ = [
    "ClusterState", "DomainError", "GrowthParams", "HLGrowthError", "NumericalFailure",
    "ParticleEvent", "SingularityError", "capacity_from_slit", "compose_evaluate", "gamma",
    "gamma_tilde", "grow", "rotated_particle_map", "rotated_particle_map_deriv",
    "slit_from_capacity", "slit_map", "slit_map_deriv", "wrap_angle",
]
