from .agent import ObsNormalizer, SacAgent
from .buffers import OFFLINE, ONLINE, ReplayBuffer, rlpd_batch
from .networks import (
    ACTION_DIM,
    STATE_DIM,
    PointCloudEncoder,
    SquashedGaussianActor,
    TwinCritic,
)

__all__ = [
    "SacAgent", "ObsNormalizer", "ReplayBuffer", "rlpd_batch", "ONLINE", "OFFLINE",
    "PointCloudEncoder", "SquashedGaussianActor", "TwinCritic", "ACTION_DIM",
    "STATE_DIM",
]
