"""Integration, limit sets and their classification."""

from .classify import (
    DEGENERATE,
    EQUILIBRIUM,
    HYPERBOLIC,
    LINEARLY_STABLE,
    NONDEGENERATE,
    PERIODIC_ORBIT,
    Classification,
    ClassificationTolerances,
    LimitSetReport,
    classify,
    split_trivial_multiplier,
)
from .integrator import IntegrationError, Solution, dopri
from .limitsets import (
    EquilibriumError,
    OrbitDetection,
    ShootingError,
    detect_periodic_orbit,
    find_equilibrium,
    find_orbit,
    finite_difference_monodromy,
    hausdorff_distance,
    refine_orbit,
)
from .trajectory import Trajectory, conservation_matrix, integrate

__all__ = [
    "Classification", "ClassificationTolerances", "DEGENERATE", "EQUILIBRIUM", "EquilibriumError",
    "HYPERBOLIC", "IntegrationError", "LINEARLY_STABLE", "LimitSetReport", "NONDEGENERATE",
    "OrbitDetection", "PERIODIC_ORBIT", "ShootingError", "Solution", "Trajectory", "classify",
    "conservation_matrix", "detect_periodic_orbit", "dopri", "find_equilibrium", "find_orbit",
    "finite_difference_monodromy", "hausdorff_distance", "integrate", "refine_orbit",
    "split_trivial_multiplier",
]
