from .materials import MaterialParams, compute_cauchy_stress, polar_rotation
from .colliders import Collider, ground_plane, wall, rodrigues, STICKY, COULOMB
from .solver import (
    Grid,
    MpmSolver,
    ParticleSet,
    cfl_limit,
    seed_object,
    shape_volume,
    J_FLOOR,
)

__all__ = [
    "MaterialParams", "compute_cauchy_stress", "polar_rotation",
    "Collider", "ground_plane", "wall", "rodrigues", "STICKY", "COULOMB",
    "Grid", "MpmSolver", "ParticleSet", "cfl_limit", "seed_object",
    "shape_volume", "J_FLOOR",
]
