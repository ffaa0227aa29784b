"""The gripper POMDP: randomized resets, noisy partial observations, stress info.

One environment instance is single-threaded and fully determined by
(seed, action sequence). Per step it applies a clipped displacement action,
advances the physics one control period, and reports the reward together with
the five-way stress summary and its episode-running peak.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .config import EnvConfig, env_config_hash
from .errors import (
    DegenerateObservationError,
    SoftGripError,
    SolverInstabilityError,
    WorkspaceError,
)
from .mpm import (
    Collider,
    Grid,
    MaterialParams,
    MpmSolver,
    ground_plane,
    seed_object,
    wall,
)
from .rewards import total_reward
from .scene import (
    Action,
    ActionLimits,
    GripperGeometry,
    GripperState,
    ObjectShape,
    RigidObjectState,
    Workspace,
    apply_action,
    quat_conj,
    quat_from_axis_angle,
    quat_mul,
    quat_to_matrix,
    rigid_step,
)
from .stress import EpisodeStressTracker, StressSummary, summarize

RIGID = "rigid"
SOFT = "soft"


@dataclass(frozen=True)
class Observation:
    """Partial point cloud plus the 11-dim proprioceptive state.

    point_cloud : (P, 3) m, camera-culled and resampled to exactly P points
    centroid    : (3,) m, mean of the un-noised cloud, noised independently
    ee_pose     : (7,) position + wxyz quaternion
    gripper_width_cm : finger separation in centimeters
    """

    point_cloud: np.ndarray
    centroid: np.ndarray
    ee_pose: np.ndarray
    gripper_width_cm: float

    def state_vector(self):
        return np.concatenate([self.ee_pose, [self.gripper_width_cm], self.centroid])


class Camera:
    """Pinhole camera used only for visibility culling."""

    def __init__(self, target, distance, elevation_deg, azimuth_deg):
        el = math.radians(elevation_deg)
        az = math.radians(azimuth_deg)
        offset = distance * np.array([
            math.cos(el) * math.cos(az),
            math.cos(el) * math.sin(az),
            math.sin(el),
        ])
        self.position = np.asarray(target, dtype=np.float64) + offset
        fwd = -offset / np.linalg.norm(offset)
        right = np.cross(fwd, np.array([0.0, 0.0, 1.0]))
        right /= np.linalg.norm(right)
        up = np.cross(right, fwd)
        self.forward, self.right, self.up = fwd, right, up

    def cull_nearest_per_bin(self, points, bin_pitch):
        """Hidden-point suppression: keep the nearest point per image-plane bin."""
        rel = points - self.position
        z = rel @ self.forward
        front = z > 1e-6
        if not np.any(front):
            return np.empty((0, 3))
        pts = points[front]
        rel = rel[front]
        z = z[front]
        u = (rel @ self.right) / z
        v = (rel @ self.up) / z
        bu = np.floor(u / bin_pitch).astype(np.int64) + 2**20
        bv = np.floor(v / bin_pitch).astype(np.int64) + 2**20
        key = bu * (2**21) + bv
        order = np.lexsort((z, key))
        k_sorted = key[order]
        first = np.ones(order.size, dtype=bool)
        first[1:] = k_sorted[1:] != k_sorted[:-1]
        return pts[order[first]]


def farthest_point_downsample(points, count):
    """Deterministic FPS started from the point farthest from the centroid."""
    n = points.shape[0]
    if n <= count:
        return points[np.resize(np.arange(n), count)]
    center = points.mean(axis=0)
    start = int(np.argmax(((points - center) ** 2).sum(axis=1)))
    chosen = np.empty(count, dtype=np.int64)
    chosen[0] = start
    dist = ((points - points[start]) ** 2).sum(axis=1)
    for i in range(1, count):
        nxt = int(np.argmax(dist))
        chosen[i] = nxt
        dist = np.minimum(dist, ((points - points[nxt]) ** 2).sum(axis=1))
    return points[chosen]


def sample_surface_points(shape: ObjectShape, n, rng):
    """Uniform surface samples in the object's local frame (rigid mode cloud)."""
    if shape.kind == "cube":
        lx, ly, lz = shape.dims
        areas = np.array([ly * lz, ly * lz, lx * lz, lx * lz, lx * ly, lx * ly])
        face = rng.choice(6, size=n, p=areas / areas.sum())
        a = rng.uniform(-0.5, 0.5, n)
        b = rng.uniform(-0.5, 0.5, n)
        pts = np.zeros((n, 3))
        for f in range(6):
            m = face == f
            axis, sign = divmod(f, 2)
            others = [i for i in range(3) if i != axis]
            pts[m, axis] = (0.5 if sign == 0 else -0.5) * shape.dims[axis]
            pts[m, others[0]] = a[m] * shape.dims[others[0]]
            pts[m, others[1]] = b[m] * shape.dims[others[1]]
        return pts
    r, h = shape.dims
    lateral = 2 * math.pi * r * h
    cap = math.pi * r * r
    kind = rng.choice(3, size=n, p=np.array([lateral, cap, cap]) / (lateral + 2 * cap))
    theta = rng.uniform(0.0, 2 * math.pi, n)
    pts = np.zeros((n, 3))
    for k in range(3):
        m = kind == k
        if k == 0:
            pts[m, 0] = r * np.cos(theta[m])
            pts[m, 1] = r * np.sin(theta[m])
            pts[m, 2] = rng.uniform(-h / 2, h / 2, int(m.sum()))
        else:
            rad = r * np.sqrt(rng.uniform(0.0, 1.0, int(m.sum())))
            pts[m, 0] = rad * np.cos(theta[m])
            pts[m, 1] = rad * np.sin(theta[m])
            pts[m, 2] = h / 2 if k == 1 else -h / 2
    return pts


class GripperEnv:
    """Pick/push environment over either the rigid proxy or the soft body."""

    def __init__(self, config: EnvConfig):
        config.validate()
        self.config = config
        self.config_hash = env_config_hash(config)
        c = config.control
        self.limits = ActionLimits(dx_max=c.dx_max, dtheta_max=c.dtheta_max,
                                   dg_max=c.dg_max, lock_orientation=c.lock_orientation)
        self.geometry = GripperGeometry(pad_half_extents=c.pad_half_extents,
                                        width_max=c.width_max, tcp_offset=c.tcp_offset)
        self.workspace = Workspace(lo=np.asarray(c.workspace_lo),
                                   hi=np.asarray(c.workspace_hi))
        center = (self.workspace.lo + self.workspace.hi) / 2.0
        center[2] = config.solver.table_height + 0.03
        o = config.observation
        self.camera = Camera(center, o.camera_distance, o.camera_elevation_deg,
                             o.camera_azimuth_deg)
        ext = (np.asarray(config.solver.grid_resolution) - 1) * config.solver.grid_spacing
        self._grid_extent = ext
        self._nominal_xy = (np.asarray(config.object.nominal_xy, dtype=np.float64)
                            if config.object.nominal_xy is not None
                            else ext[:2] / 2.0)
        self.mode = None
        self.tracker = EpisodeStressTracker()
        self._episode_active = False
        # ablation switch: when off, the reward omits the stress term entirely
        # (the per-step stress summaries in `info` are unaffected)
        self.stress_reward_enabled = True

    # --- reset ---

    def reset(self, seed, mode=SOFT, noise=True):
        if mode not in (RIGID, SOFT):
            raise SoftGripError(f"unknown mode {mode!r}")
        cfg = self.config
        self.mode = mode
        self.noise_enabled = bool(noise)
        self.seed = int(seed)
        streams = np.random.SeedSequence(self.seed).spawn(4)
        mat_rng = np.random.default_rng(streams[0])
        place_rng = np.random.default_rng(streams[1])
        self._noise_rng = np.random.default_rng(streams[2])
        shape_rng = np.random.default_rng(streams[3])

        r = cfg.randomization
        self.material = MaterialParams(
            youngs_modulus=float(mat_rng.uniform(*r.youngs_range)),
            poisson_ratio=float(mat_rng.uniform(*r.poisson_range)),
            density=r.density,
            friction_coeff=float(mat_rng.uniform(*r.friction_range)),
        )

        shape = ObjectShape(cfg.object.shape, tuple(cfg.object.dims))
        half = shape.half_extents
        z_center = cfg.solver.table_height + half[2]
        spacing = cfg.solver.grid_spacing
        lo = 2.5 * spacing
        hi2 = self._grid_extent[:2] - 2.5 * spacing
        placed = False
        for _ in range(10):
            jitter = place_rng.uniform(-r.object_jitter_xy, r.object_jitter_xy, 2)
            yaw = math.radians(cfg.object.nominal_yaw_deg
                               + place_rng.uniform(-r.object_jitter_yaw_deg,
                                                   r.object_jitter_yaw_deg))
            xy = self._nominal_xy + jitter
            bound = float(np.hypot(half[0], half[1]))
            if np.all(xy - bound >= lo) and np.all(xy + bound <= hi2):
                placed = True
                break
        if not placed:
            raise WorkspaceError("object could not be placed after 10 jitter draws")
        self._object_shape = shape
        obj_center = np.array([xy[0], xy[1], z_center])

        ee_nominal = np.array([self._nominal_xy[0], self._nominal_xy[1],
                               cfg.solver.table_height + cfg.control.start_height])
        ee_pos = self.workspace.clamp(ee_nominal + place_rng.uniform(
            -r.ee_jitter, r.ee_jitter, 3))
        self.gripper = GripperState(ee_pos=ee_pos, ee_quat=[1.0, 0.0, 0.0, 0.0],
                                    width=cfg.control.start_width)

        if mode == SOFT:
            grid = Grid(cfg.solver.grid_resolution, spacing)
            self.solver = MpmSolver(
                grid, self.material, dt=cfg.solver.dt,
                gravity=(0.0, 0.0, -cfg.solver.gravity),
                cfl_factor=cfg.solver.cfl_factor,
                validate_material=r.stiffest_material(),
            )
            particles = seed_object(
                shape.kind, shape.dims, cfg.solver.particles_per_cell,
                self.material, grid, center=obj_center, yaw=yaw, rng=place_rng,
            )
            self.solver.attach(particles)
            table_mode = cfg.solver.table_surface
            self._pads = [
                Collider(shape="box", position=np.zeros(3),
                         half_extents=np.asarray(cfg.control.pad_half_extents),
                         surface="coulomb", friction=self.material.friction_coeff)
                for _ in range(2)
            ]
            walls = [
                wall(0, -1, 1.5 * spacing, cfg.solver.wall_friction),
                wall(0, 1, self._grid_extent[0] - 1.5 * spacing, cfg.solver.wall_friction),
                wall(1, -1, 1.5 * spacing, cfg.solver.wall_friction),
                wall(1, 1, self._grid_extent[1] - 1.5 * spacing, cfg.solver.wall_friction),
            ]
            self.solver.colliders = [
                ground_plane(cfg.solver.table_height, surface=table_mode,
                             friction=self.material.friction_coeff),
                *walls,
                *self._pads,
            ]
            self._place_pads(self.gripper)
            self.rigid_object = None
        else:
            self.solver = None
            self.rigid_object = RigidObjectState(
                pos=obj_center, quat=quat_from_axis_angle([0.0, 0.0, yaw]), shape=shape)
        self._surface_local = sample_surface_points(shape, 1024, shape_rng)

        self.tracker.reset()
        self.t = 0
        self._hold = 0
        self._episode_active = True
        self._failed = False
        self._episode_success = False
        centroid = self.object_centroid()
        self._initial_centroid = centroid.copy()
        if cfg.task.kind == "pick":
            self._goal = centroid + np.array([0.0, 0.0, cfg.task.lift_goal_offset])
        else:
            self._goal = np.array([cfg.task.push_goal[0], cfg.task.push_goal[1],
                                   cfg.solver.table_height + half[2]])
        self._last_obs = self.observe()
        return self._last_obs

    def _place_pads(self, gripper, linear_velocity=None, angular_velocity=None):
        centers = self.geometry.pad_centers(gripper.ee_pos, gripper.ee_quat, gripper.width)
        rot = quat_to_matrix(gripper.ee_quat)
        for pad, center, vel in zip(self._pads, centers,
                                    linear_velocity or (np.zeros(3), np.zeros(3))):
            pad.position = np.asarray(center, dtype=np.float64)
            pad.rotation = rot.copy()
            pad.linear_velocity = np.asarray(vel, dtype=np.float64)
            pad.angular_velocity = (np.zeros(3) if angular_velocity is None
                                    else np.asarray(angular_velocity, dtype=np.float64))

    # --- state queries ---

    def object_centroid(self):
        if self.mode == SOFT:
            return self.solver.particles.x.mean(axis=0)
        return self.rigid_object.pos.copy()

    def object_height(self):
        return float(self.object_centroid()[2] - self.config.solver.table_height)

    def _goal_distance(self, centroid):
        if self.config.task.kind == "pick":
            return float(np.linalg.norm(centroid - self._goal))
        return float(np.linalg.norm(centroid[:2] - self._goal[:2]))

    def _success_now(self, centroid):
        if self.config.task.kind == "pick":
            return bool(centroid[2] - self.config.solver.table_height
                        >= self.config.task.lift_threshold)
        return bool(np.linalg.norm(centroid[:2] - self._goal[:2])
                    <= self.config.task.success_radius)

    # --- stepping ---

    def step(self, action):
        """One control step; ``action`` is the policy's [-1, 1]^7 command."""
        if not self._episode_active:
            raise SoftGripError("episode is over; call reset() first")
        physical = self.limits.scale_normalized(action)
        prev = self.gripper
        self.gripper = apply_action(prev, physical, self.limits, self.workspace,
                                    self.geometry)
        failure = False
        if self.mode == SOFT:
            failure = not self._advance_soft(prev, self.gripper)
            vm = self.solver.particles.vm
            summary = summarize(vm) if not failure else self.tracker.snapshot()
        else:
            self.rigid_object = rigid_step(self.rigid_object, self.gripper, prev,
                                           self.geometry,
                                           self.config.solver.table_height)
            summary = StressSummary.zeros()
        self.tracker.track(summary)

        centroid = self.object_centroid()
        tcp = self.geometry.tcp(self.gripper.ee_pos, self.gripper.ee_quat)
        d_approach = float(np.linalg.norm(centroid - tcp))
        h = float(centroid[2] - self.config.solver.table_height)
        d_goal = self._goal_distance(centroid)
        stress_active = self.mode == SOFT and self.stress_reward_enabled
        reward, terms = total_reward(self.config.task.kind, d_approach, h, d_goal,
                                     summary, stress_active, self.config.reward)

        self.t += 1
        success_now = self._success_now(centroid) and not failure
        self._hold = self._hold + 1 if success_now else 0
        held = self._hold >= self.config.task.hold_steps
        timeout = self.t >= self.config.task.horizon
        done = held or timeout or failure
        # success-hold and horizon are truncations: holding at the goal stays
        # valuable, so the learner bootstraps through them. Only solver
        # failure is a true terminal state (otherwise finishing an episode
        # would be worth less than loitering near the object forever).
        terminal = failure
        if done:
            self._episode_active = False
            self._failed = failure
            self._episode_success = held

        if not failure:
            try:
                self._last_obs = self.observe()
            except DegenerateObservationError:
                failure = True
                done = True
                terminal = True
                self._episode_active = False
                self._failed = True
                self._episode_success = False

        info = {
            "stress": summary,
            "stress_peak": self.tracker.snapshot(),
            "success": success_now,
            "episode_success": self._episode_success,
            "failure": failure,
            "terminal": terminal,
            "reward_terms": terms,
            "centroid": centroid,
            "object_height": h,
            "d_goal": d_goal,
            "applied_action": physical.to_array(),
            "mode": self.mode,
        }
        return self._last_obs, float(reward), bool(done), info

    def _advance_soft(self, prev: GripperState, new: GripperState):
        """Drive the finger colliders across one control period; False on failure."""
        control_dt = self.config.control.control_dt
        start = self.geometry.pad_centers(prev.ee_pos, prev.ee_quat, prev.width)
        end = self.geometry.pad_centers(new.ee_pos, new.ee_quat, new.width)
        vels = [(e - s) / control_dt for s, e in zip(start, end)]
        dq = quat_mul(new.ee_quat, quat_conj(prev.ee_quat))
        angle = 2.0 * math.atan2(float(np.linalg.norm(dq[1:])), float(abs(dq[0])))
        if angle > 1e-12:
            axis = dq[1:] / np.linalg.norm(dq[1:])
            omega = axis * angle / control_dt * (1.0 if dq[0] >= 0 else -1.0)
        else:
            omega = np.zeros(3)
        self._place_pads(prev, linear_velocity=vels, angular_velocity=omega)
        try:
            self.solver.step(control_dt)
        except SolverInstabilityError:
            return False
        finally:
            self._place_pads(new)
        return True

    # --- observation ---

    def observe(self, noise=None):
        """Assemble the Observation; ``noise`` overrides the episode setting."""
        use_noise = self.noise_enabled if noise is None else bool(noise)
        if self.mode == SOFT:
            source = self.solver.particles.x
        else:
            rot = quat_to_matrix(self.rigid_object.quat)
            source = self._surface_local @ rot.T + self.rigid_object.pos
        visible = self.camera.cull_nearest_per_bin(source, self.config.observation.bin_pitch)
        if visible.shape[0] == 0:
            raise DegenerateObservationError("no surface point visible to the camera")
        cloud = farthest_point_downsample(visible, self.config.observation.num_points)
        centroid = cloud.mean(axis=0)
        ee_pos = self.gripper.ee_pos.copy()
        ee_quat = self.gripper.ee_quat.copy()
        width = self.gripper.width
        if use_noise:
            n = self.config.randomization.noise
            rng = self._noise_rng
            cloud = cloud + rng.normal(0.0, n.points, cloud.shape)
            centroid = centroid + rng.normal(0.0, n.centroid, 3)
            ee_pos = ee_pos + rng.normal(0.0, n.ee_position, 3)
            rot_noise = rng.normal(0.0, math.radians(n.ee_orientation_deg), 3)
            ee_quat = quat_mul(quat_from_axis_angle(rot_noise), ee_quat)
            width = width + float(rng.normal(0.0, n.width))
        return Observation(
            point_cloud=cloud,
            centroid=centroid,
            ee_pose=np.concatenate([ee_pos, ee_quat]),
            gripper_width_cm=width * 100.0,
        )

    # --- bookkeeping for logs and demos ---

    def episode_header(self):
        return {
            "seed": self.seed,
            "task": self.config.task.kind,
            "mode": self.mode,
            "material": {
                "E": self.material.youngs_modulus,
                "nu": self.material.poisson_ratio,
                "mu": self.material.friction_coeff,
            },
            "config_hash": self.config_hash,
        }

    @property
    def episode_success(self):
        return self._episode_success

    @property
    def episode_failed(self):
        return self._failed


class EpisodeLogger:
    """JSONL episode stream: one header record, then one record per step."""

    def __init__(self, path):
        self._f = open(path, "a")

    def start_episode(self, header):
        self._f.write(json.dumps({"header": header}, sort_keys=True) + "\n")

    def log_step(self, t, action, reward, terms, summary: StressSummary, success, done):
        record = {
            "t": int(t),
            "action": [float(a) for a in action],
            "reward": float(reward),
            "reward_terms": {k: float(v) for k, v in terms.items()},
            "stress": summary.as_log_dict(),
            "success": bool(success),
            "done": bool(done),
        }
        self._f.write(json.dumps(record, sort_keys=True) + "\n")

    def close(self):
        self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
