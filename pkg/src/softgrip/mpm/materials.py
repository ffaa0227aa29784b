"""Elastic material parameters and the fixed-corotated constitutive model.

The solid is fixed-corotated hyperelastic: first Piola-Kirchhoff stress
P(F) = 2 mu (F - R) + lambda (J - 1) J F^-T, with R the rotation factor of the
polar decomposition of F and J = det(F). Cauchy stress follows as
sigma = P(F) F^T / J. The model is rotation-invariant and stable under the
large deformations a gripper inflicts on a soft block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, SolverInstabilityError


@dataclass(frozen=True)
class MaterialParams:
    """Homogeneous isotropic elastic material.

    youngs_modulus : Pa
    poisson_ratio  : dimensionless, in [0, 0.5)
    density        : kg/m^3
    friction_coeff : Coulomb coefficient used at this object's contacts
    """

    youngs_modulus: float
    poisson_ratio: float
    density: float
    friction_coeff: float

    def __post_init__(self):
        if self.youngs_modulus <= 0:
            raise ConfigurationError(f"youngs_modulus must be > 0, got {self.youngs_modulus}")
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise ConfigurationError(f"poisson_ratio must be in [0, 0.5), got {self.poisson_ratio}")
        if self.density <= 0:
            raise ConfigurationError(f"density must be > 0, got {self.density}")
        if self.friction_coeff < 0:
            raise ConfigurationError(f"friction_coeff must be >= 0, got {self.friction_coeff}")

    @property
    def mu(self):
        """Shear (second Lame) parameter, Pa."""
        return self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))

    @property
    def lam(self):
        """First Lame parameter, Pa."""
        e, nu = self.youngs_modulus, self.poisson_ratio
        return e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))

    @property
    def dilational_wave_speed(self):
        """sqrt((lambda + 2 mu) / rho), the fastest elastic wave, m/s."""
        return float(np.sqrt((self.lam + 2.0 * self.mu) / self.density))


def polar_rotation(f):
    """Rotation factor of the polar decomposition of a 3x3 matrix with det > 0.

    Newton iteration R <- (R + R^-T)/2, quadratically convergent; good to
    ~1e-14 in a handful of steps for the deformation range we simulate.
    """
    r = np.asarray(f, dtype=np.float64).copy()
    for _ in range(40):
        r_next = 0.5 * (r + np.linalg.inv(r).T)
        if np.linalg.norm(r_next - r) < 1e-14:
            r = r_next
            break
        r = r_next
    return r


def compute_cauchy_stress(f, material: MaterialParams, particle_index=None):
    """Cauchy stress of one deformation gradient, symmetrized, in Pa.

    Raises SolverInstabilityError when det(F) <= 0 (the offending particle
    index is attached when the caller knows it).
    """
    f = np.asarray(f, dtype=np.float64)
    j = float(np.linalg.det(f))
    if j <= 0.0:
        raise SolverInstabilityError(
            f"non-positive det(F) = {j:.3e}", particle_index=particle_index
        )
    r = polar_rotation(f)
    mu, lam = material.mu, material.lam
    # P(F) F^T / J; the lambda term collapses because F^-T F^T = I.
    sigma = (2.0 * mu / j) * (f - r) @ f.T + lam * (j - 1.0) * np.eye(3)
    return 0.5 * (sigma + sigma.T)
