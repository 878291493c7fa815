"""Hyperbolic space models, the function space C_omega(X) and certified perturbation constructions."""

from .errors import (
    ConfigError,
    ConstructionError,
    DomainError,
    HypermodError,
    InfeasibleError,
    MisuseError,
)
from .geometry import Euclidean, Point, PoincareHalfPlane, Ray, Space, StarTree, make_space
from .kernels import get_backend
from .moduli import Modulus, find_M, find_sprime, modulus_from_config

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConstructionError",
    "DomainError",
    "Euclidean",
    "HypermodError",
    "InfeasibleError",
    "MisuseError",
    "Modulus",
    "Point",
    "PoincareHalfPlane",
    "Ray",
    "Space",
    "StarTree",
    "find_M",
    "find_sprime",
    "get_backend",
    "make_space",
    "modulus_from_config",
    "__version__",
]
