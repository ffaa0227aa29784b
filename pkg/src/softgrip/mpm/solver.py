"""MLS-MPM solver: particle state, object seeding, and the control-rate wrapper."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from ..errors import (
    CflViolationError,
    ConfigurationError,
    OutOfDomainError,
    SolverInstabilityError,
)
from . import colliders as colliders_mod
from . import kernels
from .materials import MaterialParams

STATE_VERSION = 1

# det(F) below this is treated as a crushed, non-recoverable particle
J_FLOOR = 0.05


@dataclass
class ParticleSet:
    """Structure-of-arrays particle state; all float64, SI units."""

    x: np.ndarray        # (N, 3) position, m
    v: np.ndarray        # (N, 3) velocity, m/s
    affine: np.ndarray   # (N, 3, 3) APIC C matrix, 1/s
    f_def: np.ndarray    # (N, 3, 3) deformation gradient
    sigma: np.ndarray    # (N, 3, 3) Cauchy stress, Pa
    vm: np.ndarray       # (N,) Von Mises stress, Pa
    jdet: np.ndarray     # (N,) det(F)
    mass: np.ndarray     # (N,) kg
    vol0: np.ndarray     # (N,) rest volume, m^3

    @property
    def count(self):
        return self.x.shape[0]

    @property
    def total_mass(self):
        return float(self.mass.sum())

    @classmethod
    def from_positions(cls, positions, particle_mass, particle_volume):
        n = positions.shape[0]
        eye = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
        return cls(
            x=np.ascontiguousarray(positions, dtype=np.float64),
            v=np.zeros((n, 3)),
            affine=np.zeros((n, 3, 3)),
            f_def=eye,
            sigma=np.zeros((n, 3, 3)),
            vm=np.zeros(n),
            jdet=np.ones(n),
            mass=np.full(n, particle_mass),
            vol0=np.full(n, particle_volume),
        )


def shape_volume(shape, dims):
    if shape == "cube":
        lx, ly, lz = dims
        return lx * ly * lz
    if shape == "cylinder":
        r, h = dims
        return math.pi * r * r * h
    raise ConfigurationError(f"unknown shape {shape!r}")


def seed_object(shape, dims, particles_per_cell, material: MaterialParams,
                grid, center, yaw=0.0, rng=None, jitter=0.25):
    """Uniformly sample a cube or cylinder with a jittered lattice.

    The lattice pitch is dx / ppc^(1/3) so the expected count is
    ppc * volume / dx^3. Per-particle rest volume is the exact shape volume
    divided by the realized count, so total mass is exact by construction.
    ``center`` places the shape's centroid; ``yaw`` spins it about world z
    (the rotated configuration is the rest configuration, F = I).
    """
    if particles_per_cell < 1:
        raise ConfigurationError("particles_per_cell must be >= 1")
    if shape == "cube":
        aabb = np.asarray(dims, dtype=np.float64) / 2.0
    elif shape == "cylinder":
        r, h = dims
        aabb = np.array([r, r, h / 2.0])
    else:
        raise ConfigurationError(f"unknown shape {shape!r}")

    lo = grid.origin + 2.0 * grid.spacing
    hi = grid.origin + (np.asarray(grid.resolution) - 3) * grid.spacing
    center = np.asarray(center, dtype=np.float64)
    if np.any(center - aabb.max() < lo) or np.any(center + aabb.max() > hi):
        raise ConfigurationError(
            f"object at {center} with half-extent {aabb} does not fit the grid "
            f"interior [{lo}, {hi}] with a 2-cell margin"
        )

    pitch = grid.spacing / particles_per_cell ** (1.0 / 3.0)
    counts = np.maximum(1, np.floor((2.0 * aabb - pitch * 1e-9) / pitch).astype(int) + 1)
    if rng is None:
        rng = np.random.default_rng(0)
    axes = [(-aabb[a] + (np.arange(counts[a]) + 0.5) * pitch) for a in range(3)]
    # recenter the lattice so leftover margin is split evenly
    axes = [ax - (ax[-1] + ax[0]) / 2.0 for ax in axes]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    pts = pts + rng.uniform(-jitter, jitter, pts.shape) * pitch

    if shape == "cube":
        keep = np.all(np.abs(pts) <= aabb, axis=1)
    else:
        r, h = dims
        keep = (pts[:, 0] ** 2 + pts[:, 1] ** 2 <= r * r) & (np.abs(pts[:, 2]) <= h / 2.0)
    pts = pts[keep]
    if pts.shape[0] == 0:
        raise ConfigurationError("object sampling produced no particles")

    if yaw != 0.0:
        cy, sy = math.cos(yaw), math.sin(yaw)
        rot = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
        pts = pts @ rot.T
    pts = pts + center

    volume = shape_volume(shape, dims)
    per_volume = volume / pts.shape[0]
    return ParticleSet.from_positions(pts, material.density * per_volume, per_volume)


class Grid:
    """Fixed uniform background grid; ``resolution`` counts nodes per axis."""

    def __init__(self, resolution, spacing, origin=(0.0, 0.0, 0.0)):
        self.resolution = tuple(int(r) for r in resolution)
        if any(r < 6 for r in self.resolution):
            raise ConfigurationError("grid needs at least 6 nodes per axis")
        self.spacing = float(spacing)
        self.origin = np.asarray(origin, dtype=np.float64)
        self.mass = np.zeros(self.resolution)
        self.velocity = np.zeros(self.resolution + (3,))
        self._stamp = np.zeros(self.resolution, dtype=np.int64)
        self._touched = np.zeros((int(np.prod(self.resolution)), 3), dtype=np.int64)
        self.n_touched = 0

    @property
    def extent(self):
        return (np.asarray(self.resolution) - 1) * self.spacing


def cfl_limit(material: MaterialParams, spacing, cfl_factor=0.4):
    """Largest admissible substep for an explicit update at this stiffness."""
    return cfl_factor * spacing / material.dilational_wave_speed


class MpmSolver:
    """One deformable object on one grid, advanced by kinematic colliders.

    External contract is single-threaded: one caller advances one instance.
    Kernels run serially in fixed order, so trajectories are bit-reproducible
    for identical (seed, control sequence, config).
    """

    def __init__(self, grid: Grid, material: MaterialParams, dt, gravity=(0.0, 0.0, -9.81),
                 cfl_factor=0.4, validate_material=None):
        self.grid = grid
        self.material = material
        self.dt = float(dt)
        self.gravity = np.asarray(gravity, dtype=np.float64)
        self.cfl_factor = float(cfl_factor)
        self.colliders = []
        self.particles = None
        self.time = 0.0
        self._stamp_val = 0
        self._base_buf = None
        self._w_buf = None
        self._fx_buf = None
        bound = cfl_limit(validate_material or material, grid.spacing, cfl_factor)
        if self.dt > bound * (1.0 + 1e-12):
            raise CflViolationError(self.dt, bound)

    def attach(self, particles: ParticleSet):
        self.particles = particles
        n = particles.count
        self._base_buf = np.zeros((n, 3), dtype=np.int64)
        self._w_buf = np.zeros((n, 3, 3))
        self._fx_buf = np.zeros((n, 3))

    def substep(self, dt=None):
        """One MLS-MPM cycle. Raises on CFL violation, escape, or instability."""
        dt = self.dt if dt is None else float(dt)
        bound = cfl_limit(self.material, self.grid.spacing, self.cfl_factor)
        if dt > bound * (1.0 + 1e-12):
            raise CflViolationError(dt, bound)
        p = self.particles
        g = self.grid
        self._stamp_val += 1
        bad, n_touched = kernels.p2g(
            p.x, p.v, p.affine, p.sigma, p.jdet, p.mass, p.vol0,
            g.mass, g.velocity, g._stamp, g._touched, self._stamp_val,
            self._base_buf, self._w_buf, self._fx_buf,
            dt, g.spacing, 1.0 / g.spacing, g.origin,
        )
        if bad != kernels.OK:
            raise OutOfDomainError(
                f"particle {bad} left the grid interior at t={self.time:.4f} s",
                particle_index=bad,
            )
        g.n_touched = n_touched
        packed = colliders_mod.pack(self.colliders)
        kernels.grid_update(
            g.mass, g.velocity, g._touched, n_touched,
            dt, g.spacing, g.origin, self.gravity, *packed,
        )
        bad = kernels.g2p(
            p.x, p.v, p.affine, p.f_def, p.sigma, p.vm, p.jdet,
            g.velocity, self._base_buf, self._w_buf, self._fx_buf,
            dt, g.spacing, 1.0 / g.spacing, self.material.mu, self.material.lam,
            J_FLOOR,
        )
        if bad != kernels.OK:
            raise SolverInstabilityError(
                f"particle {bad} crushed or non-finite (det F < {J_FLOOR}) "
                f"at t={self.time:.4f} s",
                particle_index=bad,
            )
        for c in self.colliders:
            c.advance(dt)
        self.time += dt

    def step(self, control_dt):
        """Advance ceil(control_dt / dt) substeps; return the last Von Mises snapshot."""
        if control_dt <= 0:
            raise ConfigurationError("control_dt must be positive")
        n_sub = int(math.ceil(control_dt / self.dt - 1e-9))
        for _ in range(n_sub):
            self.substep()
        return self.particles.vm.copy()

    def substeps_per_control(self, control_dt):
        return int(math.ceil(control_dt / self.dt - 1e-9))

    # --- state snapshot serialization (versioned, canonical bytes) ---

    _FIELDS = ("x", "v", "affine", "f_def", "sigma", "vm", "jdet", "mass", "vol0")

    def state_bytes(self, extra=None):
        """Canonical little-endian dump of all particle fields plus metadata.

        ``extra`` carries caller-owned JSON-serializable state (e.g. the
        environment's RNG state) so a snapshot fully determines a replay.
        """
        p = self.particles
        header = {
            "version": STATE_VERSION,
            "count": int(p.count),
            "time": self.time,
            "fields": list(self._FIELDS),
            "extra": extra or {},
        }
        blob = json.dumps(header, sort_keys=True).encode()
        parts = [len(blob).to_bytes(8, "little"), blob]
        for name in self._FIELDS:
            arr = getattr(p, name)
            parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return b"".join(parts)

    def state_hash(self):
        return hashlib.sha256(self.state_bytes()).hexdigest()

    def save_state(self, path, extra=None):
        with open(path, "wb") as f:
            f.write(self.state_bytes(extra=extra))

    @staticmethod
    def read_state(path_or_bytes):
        """Parse a snapshot; returns (header dict, {field: array})."""
        if isinstance(path_or_bytes, (bytes, bytearray)):
            raw = bytes(path_or_bytes)
        else:
            with open(path_or_bytes, "rb") as f:
                raw = f.read()
        hlen = int.from_bytes(raw[:8], "little")
        header = json.loads(raw[8:8 + hlen].decode())
        if header["version"] != STATE_VERSION:
            raise ConfigurationError(f"unsupported snapshot version {header['version']}")
        n = header["count"]
        offset = 8 + hlen
        fields = {}
        for name in header["fields"]:
            shape = {
                "x": (n, 3), "v": (n, 3), "affine": (n, 3, 3), "f_def": (n, 3, 3),
                "sigma": (n, 3, 3), "vm": (n,), "jdet": (n,), "mass": (n,), "vol0": (n,),
            }[name]
            nbytes = int(np.prod(shape)) * 8
            fields[name] = np.frombuffer(raw, dtype="<f8", count=int(np.prod(shape)),
                                         offset=offset).reshape(shape).copy()
            offset += nbytes
        return header, fields

    def load_state(self, path_or_bytes):
        header, fields = self.read_state(path_or_bytes)
        self.attach(ParticleSet(
            x=fields["x"], v=fields["v"], affine=fields["affine"], f_def=fields["f_def"],
            sigma=fields["sigma"], vm=fields["vm"], jdet=fields["jdet"],
            mass=fields["mass"], vol0=fields["vol0"],
        ))
        self.time = header["time"]
        return header
