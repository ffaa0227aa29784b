"""FIFO transition storage and the 50/50 offline/online batch composition."""

from __future__ import annotations

import numpy as np

ONLINE = 0
OFFLINE = 1


class ReplayBuffer:
    """Ring buffer of transitions with a seeded without-replacement sampler."""

    def __init__(self, capacity, num_points, provenance=ONLINE):
        self.capacity = int(capacity)
        self.num_points = int(num_points)
        self.provenance = provenance
        self.points = np.zeros((capacity, num_points, 3), dtype=np.float32)
        self.state = np.zeros((capacity, 11), dtype=np.float32)
        self.action = np.zeros((capacity, 7), dtype=np.float32)
        self.reward = np.zeros(capacity, dtype=np.float32)
        self.done = np.zeros(capacity, dtype=np.float32)
        self.next_points = np.zeros((capacity, num_points, 3), dtype=np.float32)
        self.next_state = np.zeros((capacity, 11), dtype=np.float32)
        self._ptr = 0
        self._size = 0

    def __len__(self):
        return self._size

    def add(self, obs, action, reward, next_obs, done):
        i = self._ptr
        self.points[i] = obs.point_cloud
        self.state[i] = obs.state_vector()
        self.action[i] = action
        self.reward[i] = reward
        self.done[i] = float(done)
        self.next_points[i] = next_obs.point_cloud
        self.next_state[i] = next_obs.state_vector()
        self._ptr = (self._ptr + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def clear(self):
        self._ptr = 0
        self._size = 0

    def gather(self, idx):
        return {
            "points": self.points[idx],
            "state": self.state[idx],
            "action": self.action[idx],
            "reward": self.reward[idx],
            "done": self.done[idx],
            "next_points": self.next_points[idx],
            "next_state": self.next_state[idx],
            "provenance": np.full(len(idx), self.provenance, dtype=np.int8),
        }

    def sample(self, batch_size, rng):
        if self._size < batch_size:
            raise ValueError(f"buffer holds {self._size} < batch {batch_size}")
        idx = rng.choice(self._size, size=batch_size, replace=False)
        return self.gather(idx)


def rlpd_batch(online: ReplayBuffer, offline: ReplayBuffer, batch_size, rng):
    """Symmetric sampling: exactly half online, half offline transitions.

    Returns None (a wait signal) while either buffer cannot fill its half.
    """
    half = batch_size // 2
    if len(online) < half or len(offline) < half:
        return None
    a = online.sample(half, rng)
    b = offline.sample(half, rng)
    return {k: np.concatenate([a[k], b[k]], axis=0) for k in a}
