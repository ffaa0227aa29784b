"""Scripted drivers: oracle controllers standing in for a human operator.

Used to record demonstrations, to sanity-check environments in tests, and to
produce the matched grasp/pinch trajectories of the stress-contrast scenario.
All drivers emit normalized [-1, 1]^7 actions and keep internal phase state so
they never flip-flop between subgoals.
"""

from __future__ import annotations

import numpy as np


class PickDriver:
    """Align over the object, descend, close to a squeeze width, lift, hold.

    ``squeeze`` is how far below the object width the fingers close, m.
    A gentle driver uses a small squeeze (just enough to hold), a rough one a
    large squeeze. Reads privileged state (true centroid) from the env, which
    is exactly what a human teleoperator infers from the viewer.
    """

    def __init__(self, env, squeeze=0.010, align_tol=0.003, lift_margin=0.02,
                 xy_gain=1.0, lift_rate=0.5, settle_steps=3):
        self.env = env
        self.squeeze = squeeze
        self.align_tol = align_tol
        self.lift_margin = lift_margin
        self.xy_gain = xy_gain
        self.lift_rate = lift_rate  # slow lifts slip less: grid friction is rate-limited
        self.settle_steps = settle_steps
        self.phase = "align"
        self._target_width = None
        self._grasp_z = None
        self._settled = 0

    def _object_width_along_closing_axis(self):
        shape = self.env._object_shape
        half = shape.half_extents
        return 2.0 * float(half[0])

    def __call__(self, obs=None):
        env = self.env
        a = np.zeros(7)
        c = env.object_centroid()
        g = env.gripper
        dx_max = env.limits.dx_max
        dg_max = env.limits.dg_max
        if self._target_width is None:
            self._target_width = max(
                self._object_width_along_closing_axis() - self.squeeze, 0.0)

        if self.phase == "align":
            dxy = c[:2] - g.ee_pos[:2]
            a[0:2] = np.clip(self.xy_gain * dxy / dx_max, -1, 1)
            if np.linalg.norm(dxy) <= self.align_tol:
                self.phase = "descend"
                # the workspace floor bounds how deep the fingers can reach
                self._grasp_z = max(c[2] + self.lift_margin,
                                    float(env.workspace.lo[2]))
        elif self.phase == "descend":
            dxy = c[:2] - g.ee_pos[:2]
            a[0:2] = np.clip(self.xy_gain * dxy / dx_max, -1, 1)
            a[2] = np.clip((self._grasp_z - g.ee_pos[2]) / dx_max, -1, 1)
            if abs(g.ee_pos[2] - self._grasp_z) <= 0.004:
                self.phase = "close"
        elif self.phase == "close":
            a[6] = np.clip((self._target_width - g.width) / dg_max, -1, 1)
            if g.width <= self._target_width + 1e-4:
                self.phase = "settle"
        elif self.phase == "settle":
            a[6] = np.clip((self._target_width - g.width) / dg_max, -1, 1)
            self._settled += 1
            if self._settled >= self.settle_steps:
                self.phase = "lift"
                self._rel_z = c[2] - g.ee_pos[2]
        else:  # lift and hold; regrip when the object slips down the fingers
            rel_z = c[2] - g.ee_pos[2]
            if rel_z < self._rel_z - 0.006 and g.width > 0.015:
                self._target_width = max(self._target_width - 0.003, 0.015)
                self._rel_z = rel_z
            else:
                a[2] = self.lift_rate
            a[6] = np.clip((self._target_width - g.width) / dg_max, -1, 1)
        return a


class PushDriver:
    """Travel high behind the object, descend, shove it toward the goal.

    The fingers close into a narrow pusher first, the approach happens well
    above the block (plowing through it would both fail and crush it), and
    the push itself runs at a reduced rate so the soft block is not squirted
    sideways.
    """

    def __init__(self, env, standoff=0.032, push_rate=0.6):
        self.env = env
        self.standoff = standoff
        self.push_rate = push_rate
        self.phase = "travel"

    def __call__(self, obs=None):
        env = self.env
        a = np.zeros(7)
        c = env.object_centroid()
        g = env.gripper
        goal = env._goal
        dx_max = env.limits.dx_max
        to_goal = goal[:2] - c[:2]
        dist = float(np.linalg.norm(to_goal))
        direction = to_goal / dist if dist > 1e-9 else np.zeros(2)
        travel_z = c[2] + 0.075  # pads clear the block during lateral travel
        push_z = c[2] + 0.025

        # narrow pusher regardless of phase
        a[6] = -1.0 if g.width > 0.022 else np.clip((0.02 - g.width) / env.limits.dg_max,
                                                    -1, 1)
        stage_xy = env.workspace.clamp(
            np.array([*(c[:2] - direction * self.standoff), push_z]))[:2]

        if self.phase == "travel":
            dxy = stage_xy - g.ee_pos[:2]
            a[0:2] = np.clip(dxy / dx_max, -1, 1)
            a[2] = np.clip((travel_z - g.ee_pos[2]) / dx_max, -1, 1)
            if np.linalg.norm(dxy) < 0.004:
                self.phase = "descend"
        elif self.phase == "descend":
            dxy = stage_xy - g.ee_pos[:2]
            a[0:2] = np.clip(dxy / dx_max, -1, 1)
            a[2] = np.clip((push_z - g.ee_pos[2]) / dx_max, -1, 1)
            if abs(g.ee_pos[2] - push_z) < 0.004:
                self.phase = "push"
        else:
            a[0:2] = np.clip(direction * self.push_rate, -1, 1)
            a[2] = np.clip((push_z - g.ee_pos[2]) / dx_max, -1, 1)
        return a


class SqueezeDriver:
    """Descend at a fixed lateral offset and close by a fixed displacement.

    With zero offset the pads land flat across the object (firm grasp); with a
    lateral offset the pad edges catch a corner region (pinch). Closing
    displacement is matched between the two so their stress fields are
    comparable.
    """

    def __init__(self, env, offset_xy=(0.0, 0.0), closing=0.012, settle_steps=10,
                 z_offset=0.0, contact_width=None):
        self.env = env
        self.offset_xy = np.asarray(offset_xy, dtype=np.float64)
        self.closing = closing
        self.settle_steps = settle_steps
        self.z_offset = z_offset
        # material width along the closing axis at the contact site; defaults
        # to the object's full width (a face-on grasp)
        self.contact_width = contact_width
        self.phase = "align"
        self._target_width = None
        self._held = 0

    @property
    def done(self):
        return self.phase == "done"

    def __call__(self, obs=None):
        env = self.env
        a = np.zeros(7)
        c = env.object_centroid()
        g = env.gripper
        dx_max = env.limits.dx_max
        dg_max = env.limits.dg_max
        if self._target_width is None:
            width0 = (self.contact_width if self.contact_width is not None
                      else 2.0 * float(env._object_shape.half_extents[0]))
            self._target_width = max(width0 - self.closing, 0.0)

        if self.phase == "align":
            target_xy = c[:2] + self.offset_xy
            dxy = target_xy - g.ee_pos[:2]
            a[0:2] = np.clip(dxy / dx_max, -1, 1)
            if np.linalg.norm(dxy) <= 0.002:
                self.phase = "descend"
        elif self.phase == "descend":
            grasp_z = c[2] + 0.02 + self.z_offset
            a[2] = np.clip((grasp_z - g.ee_pos[2]) / dx_max, -1, 1)
            if abs(g.ee_pos[2] - grasp_z) <= 0.003:
                self.phase = "close"
        elif self.phase == "close":
            a[6] = np.clip((self._target_width - g.width) / dg_max, -1, 1)
            if g.width <= self._target_width + 1e-4:
                self.phase = "settle"
        elif self.phase == "settle":
            a[6] = np.clip((self._target_width - g.width) / dg_max, -1, 1)
            self._held += 1
            if self._held >= self.settle_steps:
                self.phase = "done"
        return a
