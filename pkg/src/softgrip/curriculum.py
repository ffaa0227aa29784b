"""Rigid-to-soft stage controller.

Training starts against the rigid proxy; once the windowed success rate
clears the threshold the controller fires exactly one switch to soft-body
simulation. Network and optimizer state survive the switch; the online
replay buffer does not (rigid transitions misrepresent soft dynamics and
carry zero stress).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .config import CurriculumConfig

RIGID_PHASE = "rigid"
SOFT_PHASE = "soft"


@dataclass
class CurriculumState:
    config: CurriculumConfig = field(default_factory=CurriculumConfig)
    enabled: bool = True
    phase: str = RIGID_PHASE
    switched_at: int = None
    episodes_seen: int = 0

    def __post_init__(self):
        if not self.enabled:
            self.phase = SOFT_PHASE
        self._window = deque(maxlen=self.config.window)

    @property
    def window_rate(self):
        if not self._window:
            return 0.0
        return sum(self._window) / len(self._window)

    def record_episode(self, success):
        """Push one episode outcome; returns True when this call fires the switch."""
        self.episodes_seen += 1
        if self.phase == SOFT_PHASE:
            return False
        self._window.append(bool(success))
        if (len(self._window) == self.config.window
                and self.window_rate >= self.config.success_threshold):
            self.phase = SOFT_PHASE
            self.switched_at = self.episodes_seen
            return True
        return False
