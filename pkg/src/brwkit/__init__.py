"""Branching random walks in random environment, lattice F-KPP fronts,
tilted and killed random walks, and annihilating signed particles."""
from ._kernels import BACKEND
from .env import DistSpec, Environment, WindowError, load_environment, sample_environment, save_environment
from .fkpp import IntegratorOpts, LatticeField
from .potential import ConstantPotential, PiecewisePotential

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConstantPotential",
    "DistSpec",
    "Environment",
    "IntegratorOpts",
    "LatticeField",
    "PiecewisePotential",
    "WindowError",
    "load_environment",
    "sample_environment",
    "save_environment",
]
