"""Kinematic colliders: half-spaces and boxes in a moving rigid frame.

Colliders never carry state of their own beyond the frame pose and velocity;
coupling happens purely through grid-velocity projection in the solver. The
same objects describe the table, workspace walls, and the two gripper pads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels

STICKY = "sticky"
COULOMB = "coulomb"


def rodrigues(axis_angle):
    """Rotation matrix of an axis-angle vector (right-handed, radians)."""
    theta = float(np.linalg.norm(axis_angle))
    if theta < 1e-12:
        return np.eye(3)
    k = np.asarray(axis_angle, dtype=np.float64) / theta
    kx = np.array([
        [0.0, -k[2], k[1]],
        [k[2], 0.0, -k[0]],
        [-k[1], k[0], 0.0],
    ])
    return np.eye(3) + np.sin(theta) * kx + (1.0 - np.cos(theta)) * (kx @ kx)


@dataclass
class Collider:
    """One rigid collision shape.

    shape        : "halfspace" (occupies local z <= 0) or "box" (|q| <= half_extents)
    position     : frame origin in world, m
    rotation     : 3x3 world-from-local rotation
    half_extents : box half sizes, m (ignored for half-spaces)
    surface      : "sticky" or "coulomb"
    friction     : Coulomb coefficient (coulomb surfaces only)
    linear_velocity / angular_velocity : frame twist, m/s and rad/s
    """

    shape: str
    position: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    half_extents: np.ndarray = field(default_factory=lambda: np.zeros(3))
    surface: str = STICKY
    friction: float = 0.0
    linear_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.shape not in ("halfspace", "box"):
            raise ValueError(f"unknown collider shape {self.shape!r}")
        if self.surface not in (STICKY, COULOMB):
            raise ValueError(f"unknown surface mode {self.surface!r}")
        self.position = np.asarray(self.position, dtype=np.float64).copy()
        self.rotation = np.asarray(self.rotation, dtype=np.float64).copy()
        self.half_extents = np.asarray(self.half_extents, dtype=np.float64).copy()
        self.linear_velocity = np.asarray(self.linear_velocity, dtype=np.float64).copy()
        self.angular_velocity = np.asarray(self.angular_velocity, dtype=np.float64).copy()

    def sdf(self, point):
        """Signed distance (negative inside), continuous everywhere."""
        d, _, _, _ = kernels.collider_sdf_normal(
            kernels.KIND_HALFSPACE if self.shape == "halfspace" else kernels.KIND_BOX,
            self.rotation, self.position, self.half_extents,
            float(point[0]), float(point[1]), float(point[2]),
        )
        return d

    def normal(self, point):
        """Outward world normal at (or nearest to) a point."""
        _, nx, ny, nz = kernels.collider_sdf_normal(
            kernels.KIND_HALFSPACE if self.shape == "halfspace" else kernels.KIND_BOX,
            self.rotation, self.position, self.half_extents,
            float(point[0]), float(point[1]), float(point[2]),
        )
        return np.array([nx, ny, nz])

    def velocity_at(self, point):
        r = np.asarray(point, dtype=np.float64) - self.position
        return self.linear_velocity + np.cross(self.angular_velocity, r)

    def advance(self, dt):
        """Integrate the frame pose by its twist over dt."""
        self.position = self.position + self.linear_velocity * dt
        omega = self.angular_velocity
        if np.any(omega):
            self.rotation = rodrigues(omega * dt) @ self.rotation


def ground_plane(height, surface=STICKY, friction=0.0):
    """Half-space table at z = height with +z outward."""
    return Collider(
        shape="halfspace",
        position=np.array([0.0, 0.0, height]),
        surface=surface,
        friction=friction,
    )


def wall(axis, sign, offset, friction=0.3):
    """Half-space wall facing inward along +-axis at the given coordinate."""
    rot = np.eye(3)
    normal = np.zeros(3)
    normal[axis] = -float(sign)  # outward normal points back into the domain
    # build a rotation whose local +z maps onto the desired normal
    z = normal
    ref = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    xaxis = np.cross(ref, z)
    xaxis /= np.linalg.norm(xaxis)
    yaxis = np.cross(z, xaxis)
    rot = np.column_stack([xaxis, yaxis, z])
    pos = np.zeros(3)
    pos[axis] = offset
    return Collider(shape="halfspace", position=pos, rotation=rot,
                    surface=COULOMB, friction=friction)


def pack(colliders):
    """Flatten a collider list into the arrays the grid kernel consumes."""
    n = len(colliders)
    kind = np.empty(n, dtype=np.int8)
    mode = np.empty(n, dtype=np.int8)
    friction = np.empty(n, dtype=np.float64)
    rot = np.empty((n, 3, 3), dtype=np.float64)
    pos = np.empty((n, 3), dtype=np.float64)
    half = np.empty((n, 3), dtype=np.float64)
    vlin = np.empty((n, 3), dtype=np.float64)
    omega = np.empty((n, 3), dtype=np.float64)
    for i, c in enumerate(colliders):
        kind[i] = kernels.KIND_HALFSPACE if c.shape == "halfspace" else kernels.KIND_BOX
        mode[i] = kernels.MODE_STICKY if c.surface == STICKY else kernels.MODE_COULOMB
        friction[i] = c.friction
        rot[i] = c.rotation
        pos[i] = c.position
        half[i] = c.half_extents
        vlin[i] = c.linear_velocity
        omega[i] = c.angular_velocity
    return kind, mode, friction, rot, pos, half, vlin, omega
