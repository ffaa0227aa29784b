"""All tunables in one serializable record, with a stable content hash.

The environment-facing sections feed the config hash that demo files pin:
a demo replays only against the exact physics/observation settings it was
recorded under. Learner and run-budget settings deliberately stay out of
that hash.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .errors import ConfigurationError
from .mpm import MaterialParams, cfl_limit
from .rewards import RewardConfig, StressPenaltyConfig

CONFIG_VERSION = 1


@dataclass(frozen=True)
class SolverConfig:
    grid_resolution: tuple = (32, 32, 32)   # nodes per axis
    grid_spacing: float = 0.005             # m; object should span >= 8 cells
    dt: float = 4.2e-4                      # s, fixed per run
    cfl_factor: float = 0.4
    gravity: float = 9.81                   # magnitude, applied along -z
    particles_per_cell: int = 3
    table_height: float = 0.015             # m, sticky half-space
    table_surface: str = "sticky"           # push configs use coulomb
    wall_friction: float = 0.3


@dataclass(frozen=True)
class ObjectConfig:
    shape: str = "cube"                     # cube | cylinder
    dims: tuple = (0.04, 0.04, 0.04)        # cube: lx,ly,lz; cylinder: r,h
    nominal_xy: tuple = None                # None -> grid footprint center
    nominal_yaw_deg: float = 0.0            # jitter is added on top


@dataclass(frozen=True)
class TaskConfig:
    kind: str = "pick"                      # pick | push
    lift_threshold: float = 0.09            # m above the table (pick success)
    lift_goal_offset: float = 0.10          # shaping goal above initial centroid
    push_goal: tuple = (0.47, 0.0)          # m, on the table plane
    success_radius: float = 0.02
    horizon: int = 100                      # pick default; push uses 150
    hold_steps: int = 5


@dataclass(frozen=True)
class NoiseConfig:
    points: float = 0.002                   # m, per component
    centroid: float = 0.002
    ee_position: float = 0.001
    ee_orientation_deg: float = 0.5
    width: float = 0.0005


@dataclass(frozen=True)
class RandomizationConfig:
    youngs_range: tuple = (5000.0, 10000.0)
    poisson_range: tuple = (0.325, 0.4)
    friction_range: tuple = (0.2, 0.6)
    density: float = 1000.0
    object_jitter_xy: float = 0.02
    object_jitter_yaw_deg: float = 5.0
    ee_jitter: float = 0.02
    noise: NoiseConfig = field(default_factory=NoiseConfig)

    def validate(self):
        for name in ("youngs_range", "poisson_range", "friction_range"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ConfigurationError(f"{name} is empty: [{lo}, {hi}]")

    def stiffest_material(self):
        return MaterialParams(
            youngs_modulus=self.youngs_range[1],
            poisson_ratio=self.poisson_range[1],
            density=self.density,
            friction_coeff=self.friction_range[0],
        )


@dataclass(frozen=True)
class ObservationConfig:
    num_points: int = 128
    camera_elevation_deg: float = 45.0
    camera_azimuth_deg: float = 180.0
    camera_distance: float = 0.6
    bin_pitch: float = 0.004                # rad, image-plane occlusion bin size


@dataclass(frozen=True)
class ControlConfig:
    control_dt: float = 0.1
    dx_max: float = 0.01
    dtheta_max: float = 0.1
    dg_max: float = 0.005
    lock_orientation: bool = False
    start_width: float = 0.06
    start_height: float = 0.095             # EE start above the table, m
    pad_half_extents: tuple = (0.005, 0.01, 0.02)
    width_max: float = 0.08
    tcp_offset: float = 0.02
    workspace_lo: tuple = (0.03, 0.03, 0.055)
    workspace_hi: tuple = (0.125, 0.125, 0.155)


@dataclass(frozen=True)
class EnvConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    object: ObjectConfig = field(default_factory=ObjectConfig)
    task: TaskConfig = field(default_factory=TaskConfig)
    randomization: RandomizationConfig = field(default_factory=RandomizationConfig)
    observation: ObservationConfig = field(default_factory=ObservationConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)

    def validate(self):
        self.randomization.validate()
        self.reward.validate()
        if self.task.kind not in ("pick", "push"):
            raise ConfigurationError(f"unknown task kind {self.task.kind!r}")
        if self.solver.table_surface not in ("sticky", "coulomb"):
            raise ConfigurationError("table_surface must be sticky or coulomb")
        # dt must clear the CFL bound for the stiffest draw the run can make
        bound = cfl_limit(self.randomization.stiffest_material(),
                          self.solver.grid_spacing, self.solver.cfl_factor)
        if self.solver.dt > bound * (1.0 + 1e-12):
            raise ConfigurationError(
                f"solver.dt={self.solver.dt:.3e} exceeds the CFL bound "
                f"{bound:.3e} at the stiffest randomized material"
            )
        return self


@dataclass(frozen=True)
class LearnerConfig:
    point_hidden: tuple = (32, 64)          # per-point MLP widths
    point_feature_dim: int = 64             # pooled cloud encoding size
    state_hidden: int = 32
    actor_hidden: tuple = (64, 64)
    critic_hidden: tuple = (64, 64)
    gamma: float = 0.99
    tau: float = 0.005
    lr: float = 3e-4
    batch_size: int = 256
    target_entropy: float = -7.0
    utd: int = 1
    buffer_capacity: int = 40000
    learning_starts: int = 1000
    random_warmup: int = 1000


@dataclass(frozen=True)
class CurriculumConfig:
    window: int = 50
    success_threshold: float = 0.8


@dataclass(frozen=True)
class RunConfig:
    total_steps: int = 20000
    checkpoint_every: int = 5000
    metrics_every: int = 50


@dataclass(frozen=True)
class TrainConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def validate(self):
        self.env.validate()
        return self


def _to_jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    return obj


def _from_dict(cls, data):
    if not dataclasses.is_dataclass(cls):
        return data
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigurationError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    for name, f in known.items():
        if name not in data:
            continue
        value = data[name]
        if dataclasses.is_dataclass(f.type) or f.type in _NESTED:
            kwargs[name] = _from_dict(_NESTED.get(f.type, f.type), value)
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    return cls(**kwargs)


# dataclass field types arrive as strings under `from __future__ import annotations`
_NESTED = {c.__name__: c for c in (
    SolverConfig, ObjectConfig, TaskConfig, NoiseConfig, RandomizationConfig,
    ObservationConfig, ControlConfig, EnvConfig, LearnerConfig, CurriculumConfig,
    RunConfig, RewardConfig, StressPenaltyConfig,
)}


def to_json(config, indent=2):
    payload = {"config_version": CONFIG_VERSION, **_to_jsonable(config)}
    return json.dumps(payload, indent=indent, sort_keys=True)


def train_config_from_dict(data):
    data = dict(data)
    version = data.pop("config_version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigurationError(f"unsupported config_version {version}")
    return _from_dict(TrainConfig, data).validate()


def load_train_config(path):
    with open(path) as f:
        return train_config_from_dict(json.load(f))


def save_train_config(config, path):
    with open(path, "w") as f:
        f.write(to_json(config) + "\n")


def env_config_hash(env: EnvConfig):
    """Stable hash of everything a demo replay depends on."""
    blob = json.dumps(_to_jsonable(env), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# --- presets ---


def lite_physics():
    """32^3 grid used by the pure solver test scenarios."""
    return EnvConfig().validate()


def lite_pick():
    """Desk-scale pick: small cloud, locked top-down orientation, short horizon.

    Friction is drawn from [0.5, 0.9] so a gentle grasp can physically hold
    the block; at the spec-default [0.2, 0.6] low draws make every successful
    lift require a crushing squeeze, which defeats the point of the task.
    """
    return EnvConfig(
        solver=SolverConfig(grid_resolution=(32, 32, 40)),
        task=TaskConfig(kind="pick", horizon=60),
        randomization=RandomizationConfig(friction_range=(0.5, 0.9)),
        observation=ObservationConfig(num_points=64),
        control=ControlConfig(lock_orientation=True),
    ).validate()


def lite_push():
    """Desk-scale push: wider grid along x, sliding table, planar goal."""
    return EnvConfig(
        solver=SolverConfig(grid_resolution=(48, 32, 40), table_surface="coulomb"),
        object=ObjectConfig(nominal_xy=(0.08, 0.0775)),
        task=TaskConfig(kind="push", horizon=90, push_goal=(0.16, 0.0775)),
        randomization=RandomizationConfig(friction_range=(0.5, 0.9)),
        observation=ObservationConfig(num_points=64),
        control=ControlConfig(lock_orientation=True,
                              workspace_lo=(0.02, 0.03, 0.055),
                              workspace_hi=(0.21, 0.125, 0.155)),
    ).validate()


def paper_scale():
    """Paper-facing defaults: 64^3 grid, cylinder, free orientation, P=128."""
    return EnvConfig(
        solver=SolverConfig(grid_resolution=(64, 64, 64)),
        object=ObjectConfig(shape="cylinder", dims=(0.02, 0.04)),
        task=TaskConfig(kind="pick", horizon=100),
        observation=ObservationConfig(num_points=128),
        control=ControlConfig(workspace_lo=(0.05, 0.05, 0.055),
                              workspace_hi=(0.26, 0.26, 0.25)),
    ).validate()


PRESETS = {
    "lite-physics": lite_physics,
    "lite-pick": lite_pick,
    "lite-push": lite_push,
    "paper": paper_scale,
}


def preset_env(name):
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        ) from None
