"""Gripper kinematics and the quasi-static rigid-proxy object used pre-switch.

Both physics modes share the same end-effector model: an SE(3) pose plus a
finger separation, driven by clipped displacement actions. In rigid mode the
object obeys three cheap affordance rules (grasp-by-closing, push-by-contact,
rest-on-table) instead of real dynamics; the curriculum only needs those
affordances to shape early exploration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

# quaternions are (w, x, y, z), unit norm


def quat_normalize(q):
    q = np.asarray(q, dtype=np.float64)
    return q / np.linalg.norm(q)


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_from_axis_angle(v):
    theta = float(np.linalg.norm(v))
    if theta < 1e-12:
        return np.array([1.0, 0.0, 0.0, 0.0])
    axis = np.asarray(v, dtype=np.float64) / theta
    half = 0.5 * theta
    return np.array([math.cos(half), *(math.sin(half) * axis)])


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_rotate(q, v):
    return quat_to_matrix(q) @ np.asarray(v, dtype=np.float64)


@dataclass(frozen=True)
class Action:
    """One control-step displacement command.

    dx     : Cartesian EE displacement, m (world axes)
    dtheta : axis-angle orientation displacement, rad (world axes)
    dg     : finger separation change, m
    """

    dx: np.ndarray
    dtheta: np.ndarray
    dg: float

    @classmethod
    def from_array(cls, a):
        a = np.asarray(a, dtype=np.float64)
        if a.shape != (7,):
            raise ValueError(f"action must have 7 components, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("action components must be finite")
        return cls(dx=a[:3].copy(), dtheta=a[3:6].copy(), dg=float(a[6]))

    def to_array(self):
        return np.concatenate([self.dx, self.dtheta, [self.dg]])

    @classmethod
    def zero(cls):
        return cls(np.zeros(3), np.zeros(3), 0.0)


@dataclass(frozen=True)
class ActionLimits:
    dx_max: float = 0.01        # per-component, m
    dtheta_max: float = 0.1     # norm bound, rad
    dg_max: float = 0.005       # m
    lock_orientation: bool = False

    def clip(self, action: Action) -> Action:
        dx = np.clip(action.dx, -self.dx_max, self.dx_max)
        if self.lock_orientation:
            dtheta = np.zeros(3)
        else:
            dtheta = np.asarray(action.dtheta, dtype=np.float64).copy()
            norm = np.linalg.norm(dtheta)
            if norm > self.dtheta_max:
                dtheta *= self.dtheta_max / norm
        dg = float(np.clip(action.dg, -self.dg_max, self.dg_max))
        return Action(dx=dx, dtheta=dtheta, dg=dg)

    def scale_normalized(self, a) -> Action:
        """Map a policy action in [-1, 1]^7 onto the physical limits."""
        a = np.clip(np.asarray(a, dtype=np.float64), -1.0, 1.0)
        return Action(dx=a[:3] * self.dx_max, dtheta=a[3:6] * self.dtheta_max,
                      dg=float(a[6] * self.dg_max))


@dataclass(frozen=True)
class GripperGeometry:
    """Two box pads symmetric about the EE frame; local x is the closing axis."""

    pad_half_extents: tuple = (0.005, 0.01, 0.02)  # half thickness/width/height, m
    width_max: float = 0.08
    tcp_offset: float = 0.02  # TCP sits this far below the EE origin, m

    def pad_centers(self, ee_pos, ee_quat, width):
        """World centers of the two pads at the given pose and separation."""
        r = quat_to_matrix(ee_quat)
        out = []
        for side in (-1.0, 1.0):
            local = np.array([
                side * (width / 2.0 + self.pad_half_extents[0]),
                0.0,
                -self.pad_half_extents[2],
            ])
            out.append(np.asarray(ee_pos) + r @ local)
        return out

    def tcp(self, ee_pos, ee_quat):
        return np.asarray(ee_pos) + quat_rotate(ee_quat, [0.0, 0.0, -self.tcp_offset])


@dataclass(frozen=True)
class Workspace:
    lo: np.ndarray
    hi: np.ndarray

    def clamp(self, p):
        return np.minimum(np.maximum(p, self.lo), self.hi)

    def contains(self, p, margin=0.0):
        return bool(np.all(p >= self.lo - margin) and np.all(p <= self.hi + margin))


@dataclass(frozen=True)
class GripperState:
    ee_pos: np.ndarray
    ee_quat: np.ndarray
    width: float

    def __post_init__(self):
        object.__setattr__(self, "ee_pos", np.asarray(self.ee_pos, dtype=np.float64).copy())
        object.__setattr__(self, "ee_quat", quat_normalize(self.ee_quat))

    def pose7(self):
        return np.concatenate([self.ee_pos, self.ee_quat])


def apply_action(gripper: GripperState, action: Action, limits: ActionLimits,
                 workspace: Workspace, geometry: GripperGeometry) -> GripperState:
    """Clip, compose, and clamp one displacement command. Never raises."""
    a = limits.clip(action)
    pos = workspace.clamp(gripper.ee_pos + a.dx)
    quat = quat_normalize(quat_mul(quat_from_axis_angle(a.dtheta), gripper.ee_quat))
    width = float(np.clip(gripper.width + a.dg, 0.0, geometry.width_max))
    return GripperState(ee_pos=pos, ee_quat=quat, width=width)


# --- rigid-proxy object ---


@dataclass(frozen=True)
class Obb:
    center: np.ndarray
    rot: np.ndarray
    half: np.ndarray


def obb_overlap(a: Obb, b: Obb):
    """Separating-axis test for two OBBs.

    Returns (overlap, mtv): mtv is the minimum translation vector that moves
    ``b`` out of ``a`` (zero when disjoint).
    """
    axes = []
    for i in range(3):
        axes.append(a.rot[:, i])
        axes.append(b.rot[:, i])
    for i in range(3):
        for j in range(3):
            cross = np.cross(a.rot[:, i], b.rot[:, j])
            n = np.linalg.norm(cross)
            if n > 1e-9:
                axes.append(cross / n)
    d = b.center - a.center
    best_depth = np.inf
    best_axis = None
    for axis in axes:
        ra = np.abs(axis @ a.rot) @ a.half
        rb = np.abs(axis @ b.rot) @ b.half
        dist = axis @ d
        depth = ra + rb - abs(dist)
        if depth <= 0.0:
            return False, np.zeros(3)
        if depth < best_depth:
            best_depth = depth
            best_axis = axis if dist >= 0.0 else -axis
    return True, best_axis * best_depth


@dataclass(frozen=True)
class ObjectShape:
    kind: str  # cube | cylinder
    dims: tuple

    @property
    def half_extents(self):
        """Bounding box half sizes; cylinders are boxed for the rigid proxy."""
        if self.kind == "cube":
            return np.asarray(self.dims, dtype=np.float64) / 2.0
        r, h = self.dims
        return np.array([r, r, h / 2.0])


@dataclass(frozen=True)
class RigidObjectState:
    pos: np.ndarray
    quat: np.ndarray
    shape: ObjectShape
    attached: bool = False
    rel_pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rel_quat: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))

    def __post_init__(self):
        object.__setattr__(self, "pos", np.asarray(self.pos, dtype=np.float64).copy())
        object.__setattr__(self, "quat", quat_normalize(self.quat))

    def obb(self):
        return Obb(center=self.pos, rot=quat_to_matrix(self.quat),
                   half=self.shape.half_extents)

    def bottom(self):
        h = self.obb()
        return float(self.pos[2] - (np.abs(h.rot[2]) @ h.half))


def _yaw_only(quat):
    """Project an orientation onto a pure yaw (released objects lie flat)."""
    fwd = quat_rotate(quat, [1.0, 0.0, 0.0])
    yaw = math.atan2(fwd[1], fwd[0])
    return quat_from_axis_angle([0.0, 0.0, yaw])


def _snap_to_table(obj: RigidObjectState, table_height) -> RigidObjectState:
    quat = _yaw_only(obj.quat)
    flat = replace(obj, quat=quat)
    drop = flat.bottom() - table_height
    pos = flat.pos.copy()
    pos[2] -= drop
    return replace(flat, pos=pos)


def rigid_step(obj: RigidObjectState, gripper: GripperState, prev_gripper: GripperState,
               geometry: GripperGeometry, table_height,
               engage_margin=0.002, release_margin=0.001) -> RigidObjectState:
    """Quasi-static update: grasp, carry, push, or rest.

    Grasp engages when both pads overlap the object and the separation has
    dropped below the object width (along the closing axis) minus the engage
    margin; it releases only after opening past width minus the release
    margin, so attachment is hysteretic.
    """
    ee_rot = quat_to_matrix(gripper.ee_quat)
    closing_axis = ee_rot[:, 0]
    obj_obb = obj.obb()
    obj_width = 2.0 * float(np.abs(closing_axis @ obj_obb.rot) @ obj_obb.half)

    if obj.attached:
        if gripper.width > obj_width - release_margin:
            return _snap_to_table(replace(obj, attached=False), table_height)
        pos = gripper.ee_pos + quat_rotate(gripper.ee_quat, obj.rel_pos)
        quat = quat_mul(gripper.ee_quat, obj.rel_quat)
        carried = replace(obj, pos=pos, quat=quat)
        if carried.bottom() < table_height:
            lift = table_height - carried.bottom()
            pos = carried.pos.copy()
            pos[2] += lift
            carried = replace(carried, pos=pos)
        return carried

    pads = [
        Obb(center=c, rot=ee_rot, half=np.asarray(geometry.pad_half_extents))
        for c in geometry.pad_centers(gripper.ee_pos, gripper.ee_quat, gripper.width)
    ]
    overlaps = [obb_overlap(pad, obj_obb) for pad in pads]

    if all(o for o, _ in overlaps) and gripper.width < obj_width - engage_margin:
        rel_pos = quat_to_matrix(gripper.ee_quat).T @ (obj.pos - gripper.ee_pos)
        rel_quat = quat_mul(quat_conj(gripper.ee_quat), obj.quat)
        return replace(obj, attached=True, rel_pos=rel_pos, rel_quat=rel_quat)

    # push: lateral displacement by the penetration projected on the table plane
    pos = obj.pos.copy()
    for hit, mtv in overlaps:
        if hit:
            pos[0] += mtv[0]
            pos[1] += mtv[1]
    moved = replace(obj, pos=pos)
    return _snap_to_table(moved, table_height)
