"""Soft Actor-Critic agent with a shared point-cloud encoder and BC head.

The encoder is trained by the critic loss (and by BC); the actor consumes
detached features, the standard recipe for encoder stability. Temperature is
learned in log space against a fixed target entropy. All stochastic draws go
through agent-owned torch generators, so training is reproducible bit-for-bit
for a fixed seed.
"""

from __future__ import annotations

import hashlib
import io

import numpy as np
import torch
from torch import nn

from ..config import LearnerConfig
from ..errors import LearnerDivergedError
from .networks import ACTION_DIM, PointCloudEncoder, SquashedGaussianActor, TwinCritic

CHECKPOINT_VERSION = 1


class ObsNormalizer:
    """Positions to the workspace-centered frame, width to decimeter scale."""

    def __init__(self, workspace_lo, workspace_hi):
        lo = np.asarray(workspace_lo, dtype=np.float32)
        hi = np.asarray(workspace_hi, dtype=np.float32)
        self.center = (lo + hi) / 2.0
        self.half = np.maximum((hi - lo) / 2.0, 1e-6)

    def points(self, pts):
        return (pts - self.center) / self.half

    def state(self, state):
        out = np.array(state, dtype=np.float32, copy=True)
        out[..., 0:3] = (out[..., 0:3] - self.center) / self.half   # ee position
        out[..., 7] = out[..., 7] / 10.0                            # width, cm
        out[..., 8:11] = (out[..., 8:11] - self.center) / self.half  # centroid
        return out


class SacAgent:
    def __init__(self, cfg: LearnerConfig, workspace_lo, workspace_hi, seed=0,
                 dtype=torch.float32):
        self.cfg = cfg
        self.dtype = dtype
        self.norm = ObsNormalizer(workspace_lo, workspace_hi)
        torch.manual_seed(seed)
        self.encoder = PointCloudEncoder(cfg.point_hidden, cfg.point_feature_dim,
                                         cfg.state_hidden)
        dim = self.encoder.output_dim
        self.actor = SquashedGaussianActor(dim, cfg.actor_hidden)
        self.critic = TwinCritic(dim, cfg.critic_hidden)
        self.target_critic = TwinCritic(dim, cfg.critic_hidden)
        self.target_critic.load_state_dict(self.critic.state_dict())
        for p in self.target_critic.parameters():
            p.requires_grad_(False)
        self.log_alpha = torch.zeros(1, requires_grad=True)
        if dtype is not torch.float32:
            for m in (self.encoder, self.actor, self.critic, self.target_critic):
                m.to(dtype)
            self.log_alpha = self.log_alpha.to(dtype).detach().requires_grad_(True)

        self.critic_opt = torch.optim.Adam(
            list(self.encoder.parameters()) + list(self.critic.parameters()), lr=cfg.lr)
        self.actor_opt = torch.optim.Adam(self.actor.parameters(), lr=cfg.lr)
        self.alpha_opt = torch.optim.Adam([self.log_alpha], lr=cfg.lr)
        self.bc_opt = torch.optim.Adam(
            list(self.encoder.parameters()) + list(self.actor.parameters()), lr=cfg.lr)

        self.act_generator = torch.Generator().manual_seed(seed + 1)
        self.update_generator = torch.Generator().manual_seed(seed + 2)
        self.updates_done = 0

    @property
    def alpha(self):
        return self.log_alpha.exp()

    # --- acting ---

    def _obs_tensors(self, obs):
        pts = torch.as_tensor(self.norm.points(obs.point_cloud), dtype=self.dtype)
        state = torch.as_tensor(self.norm.state(obs.state_vector()), dtype=self.dtype)
        return pts.unsqueeze(0), state.unsqueeze(0)

    def encode_observation(self, obs):
        with torch.no_grad():
            pts, state = self._obs_tensors(obs)
            return self.encoder(pts, state).squeeze(0).numpy()

    def act(self, obs, stochastic=True):
        """Action in [-1, 1]^7; stochastic sampling uses the agent's own RNG."""
        with torch.no_grad():
            pts, state = self._obs_tensors(obs)
            features = self.encoder(pts, state)
            if stochastic:
                action, log_prob, _ = self.actor.sample(
                    features, generator=self.act_generator)
                return action.squeeze(0).numpy(), float(log_prob)
            action = self.actor.deterministic(features)
            return action.squeeze(0).numpy(), None

    # --- batches ---

    def _prepare(self, batch):
        t = {}
        t["points"] = torch.as_tensor(self.norm.points(batch["points"]), dtype=self.dtype)
        t["state"] = torch.as_tensor(self.norm.state(batch["state"]), dtype=self.dtype)
        t["next_points"] = torch.as_tensor(self.norm.points(batch["next_points"]),
                                           dtype=self.dtype)
        t["next_state"] = torch.as_tensor(self.norm.state(batch["next_state"]),
                                          dtype=self.dtype)
        for key in ("action", "reward", "done"):
            t[key] = torch.as_tensor(batch[key], dtype=self.dtype)
        return t

    def _update_noise(self, batch_size):
        return {
            "next": torch.randn((batch_size, ACTION_DIM), generator=self.update_generator,
                                dtype=self.dtype),
            "actor": torch.randn((batch_size, ACTION_DIM), generator=self.update_generator,
                                 dtype=self.dtype),
        }

    # --- losses (pure given explicit noise; finite-difference testable) ---

    def critic_target(self, t, noise_next):
        """Frozen TD target: r + gamma (1 - done) (min target-Q - alpha log pi)."""
        with torch.no_grad():
            next_features = self.encoder(t["next_points"], t["next_state"])
            next_action, next_log_prob, _ = self.actor.sample(next_features,
                                                              noise=noise_next)
            target_q = self.target_critic.min_q(next_features, next_action)
            return t["reward"] + self.cfg.gamma * (1.0 - t["done"]) * (
                target_q - self.alpha.detach() * next_log_prob)

    def critic_loss(self, t, y):
        features = self.encoder(t["points"], t["state"])
        q1, q2 = self.critic(features, t["action"])
        return ((q1 - y) ** 2).mean() + ((q2 - y) ** 2).mean()

    def actor_loss(self, t, noise_actor):
        with torch.no_grad():
            features = self.encoder(t["points"], t["state"])
        action, log_prob, _ = self.actor.sample(features, noise=noise_actor)
        q = self.critic.min_q(features, action)
        return (self.alpha.detach() * log_prob - q).mean(), log_prob

    def alpha_loss(self, log_prob):
        return -(self.log_alpha * (log_prob + self.cfg.target_entropy).detach()).mean()

    def bc_loss(self, t):
        features = self.encoder(t["points"], t["state"])
        predicted = self.actor.deterministic(features)
        return ((predicted - t["action"]) ** 2).mean()

    # --- updates ---

    def update(self, batch):
        """One SAC step on critics, actor, and temperature; polyak afterwards."""
        t = self._prepare(batch)
        noise = self._update_noise(t["action"].shape[0])

        y = self.critic_target(t, noise["next"])
        c_loss = self.critic_loss(t, y)
        self.critic_opt.zero_grad()
        c_loss.backward()
        self.critic_opt.step()

        a_loss, log_prob = self.actor_loss(t, noise["actor"])
        self.actor_opt.zero_grad()
        a_loss.backward()
        self.actor_opt.step()

        t_loss = self.alpha_loss(log_prob)
        self.alpha_opt.zero_grad()
        t_loss.backward()
        self.alpha_opt.step()

        with torch.no_grad():
            for target, online in zip(self.target_critic.parameters(),
                                      self.critic.parameters()):
                target.lerp_(online, self.cfg.tau)

        losses = {
            "critic": float(c_loss.detach()),
            "actor": float(a_loss.detach()),
            "temperature": float(t_loss.detach()),
            "alpha": float(self.alpha),
            "entropy": float(-log_prob.mean()),
        }
        self._check_finite(losses)
        self.updates_done += 1
        return losses

    def bc_update(self, batch):
        t = self._prepare(batch)
        loss = self.bc_loss(t)
        self.bc_opt.zero_grad()
        loss.backward()
        self.bc_opt.step()
        losses = {"bc": float(loss.detach())}
        self._check_finite(losses)
        self.updates_done += 1
        return losses

    def _check_finite(self, losses):
        if all(np.isfinite(v) for v in losses.values()):
            return
        snapshot = {
            "losses": losses,
            "updates_done": self.updates_done,
            "param_norms": {
                name: float(torch.linalg.vector_norm(p.detach()))
                for name, p in self.named_parameter_blocks().items()
            },
        }
        raise LearnerDivergedError("non-finite training loss", snapshot=snapshot)

    # --- persistence ---

    def named_parameter_blocks(self):
        blocks = {}
        for prefix, module in (("encoder", self.encoder), ("actor", self.actor),
                               ("critic", self.critic),
                               ("target_critic", self.target_critic)):
            for name, p in module.named_parameters():
                blocks[f"{prefix}.{name}"] = p
        blocks["log_alpha"] = self.log_alpha
        return blocks

    def parameter_hash(self):
        h = hashlib.sha256()
        for name in sorted(self.named_parameter_blocks()):
            p = self.named_parameter_blocks()[name]
            h.update(name.encode())
            h.update(p.detach().numpy().tobytes())
        return h.hexdigest()

    def checkpoint_blob(self):
        payload = {
            "version": CHECKPOINT_VERSION,
            "learner_config": self.cfg.__dict__,
            "updates_done": self.updates_done,
            "encoder": self.encoder.state_dict(),
            "actor": self.actor.state_dict(),
            "critic": self.critic.state_dict(),
            "target_critic": self.target_critic.state_dict(),
            "log_alpha": self.log_alpha.detach().clone(),
            "critic_opt": self.critic_opt.state_dict(),
            "actor_opt": self.actor_opt.state_dict(),
            "alpha_opt": self.alpha_opt.state_dict(),
            "bc_opt": self.bc_opt.state_dict(),
            "act_rng": self.act_generator.get_state(),
            "update_rng": self.update_generator.get_state(),
            "norm_center": self.norm.center,
            "norm_half": self.norm.half,
        }
        buf = io.BytesIO()
        torch.save(payload, buf)
        return buf.getvalue()

    def save(self, path):
        with open(path, "wb") as f:
            f.write(self.checkpoint_blob())

    def load(self, path):
        with open(path, "rb") as f:
            payload = torch.load(io.BytesIO(f.read()), weights_only=False)
        if payload["version"] != CHECKPOINT_VERSION:
            raise LearnerDivergedError(
                f"unsupported checkpoint version {payload['version']}")
        self.encoder.load_state_dict(payload["encoder"])
        self.actor.load_state_dict(payload["actor"])
        self.critic.load_state_dict(payload["critic"])
        self.target_critic.load_state_dict(payload["target_critic"])
        with torch.no_grad():
            self.log_alpha.copy_(payload["log_alpha"])
        self.critic_opt.load_state_dict(payload["critic_opt"])
        self.actor_opt.load_state_dict(payload["actor_opt"])
        self.alpha_opt.load_state_dict(payload["alpha_opt"])
        self.bc_opt.load_state_dict(payload["bc_opt"])
        self.act_generator.set_state(payload["act_rng"])
        self.update_generator.set_state(payload["update_rng"])
        self.updates_done = payload["updates_done"]
        self.norm.center = payload["norm_center"]
        self.norm.half = payload["norm_half"]
        return payload
