"""Bistable nonlocal dispersal equations on exterior domains.

Traveling-wave profiles, convolution-based time stepping around convex
obstacles, sub/super-solution certificates and the experiments that verify
front recovery, far-field planarity and the stationary Liouville limit.
"""

__version__ = "0.1.0"

from .domain import ExteriorGrid, ObstacleSpec, build_grid, min_degree
from .evolution import Field, PlanarClosure, Trajectory, ordering_report, picard_solve, rhs, solve_interval, step
from .kernels import Kernel, Kernel1D, marginal_1d
from .nonlinearity import Bistable, Multistable, check_condition_F
from .wave import WaveProfile, decay_rates, fit_asymptotics, solve_profile

__all__ = [
    "Kernel", "Kernel1D", "marginal_1d",
    "Bistable", "Multistable", "check_condition_F",
    "WaveProfile", "decay_rates", "solve_profile", "fit_asymptotics",
    "ObstacleSpec", "ExteriorGrid", "build_grid", "min_degree",
    "Field", "Trajectory", "PlanarClosure", "rhs", "step", "picard_solve",
    "solve_interval", "ordering_report",
]
