"""Policy/critic networks: a tiny PointNet-style encoder feeding small MLPs.

The cloud branch applies a shared per-point MLP and max-pools across points,
so the encoding is exactly invariant to point order and duplication. Its
output concatenates with a state-branch embedding into the shared feature
vector consumed by the actor and both critics.
"""

from __future__ import annotations

import torch
from torch import nn

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
ACTION_DIM = 7
STATE_DIM = 11


def mlp(sizes, activate_last=False):
    layers = []
    for i in range(len(sizes) - 1):
        layers.append(nn.Linear(sizes[i], sizes[i + 1]))
        if i < len(sizes) - 2 or activate_last:
            layers.append(nn.ReLU())
    return nn.Sequential(*layers)


class PointCloudEncoder(nn.Module):
    def __init__(self, point_hidden=(32, 64), point_feature_dim=64, state_hidden=32):
        super().__init__()
        self.point_net = mlp((3, *point_hidden, point_feature_dim), activate_last=True)
        self.state_net = mlp((STATE_DIM, state_hidden), activate_last=True)
        self.output_dim = point_feature_dim + state_hidden

    def forward(self, points, state):
        # points: (B, P, 3); state: (B, 11)
        per_point = self.point_net(points)
        pooled = per_point.max(dim=1).values
        return torch.cat([pooled, self.state_net(state)], dim=-1)


class SquashedGaussianActor(nn.Module):
    def __init__(self, feature_dim, hidden=(64, 64)):
        super().__init__()
        self.trunk = mlp((feature_dim, *hidden), activate_last=True)
        self.mean_head = nn.Linear(hidden[-1], ACTION_DIM)
        self.log_std_head = nn.Linear(hidden[-1], ACTION_DIM)

    def distribution_params(self, features):
        h = self.trunk(features)
        mean = self.mean_head(h)
        log_std = torch.clamp(self.log_std_head(h), LOG_STD_MIN, LOG_STD_MAX)
        return mean, log_std

    def sample(self, features, noise=None, generator=None):
        """Reparameterized tanh-Gaussian sample and its log-density.

        ``noise`` fixes the standard-normal draw (finite-difference tests);
        otherwise it comes from ``generator``.
        """
        mean, log_std = self.distribution_params(features)
        std = log_std.exp()
        if noise is None:
            noise = torch.randn(mean.shape, generator=generator, dtype=mean.dtype,
                                device=mean.device)
        pre_tanh = mean + std * noise
        action = torch.tanh(pre_tanh)
        # N(pre | mean, std) with the tanh change of variables
        log_prob = (-0.5 * ((pre_tanh - mean) / std) ** 2
                    - log_std - 0.5 * torch.log(torch.tensor(2.0 * torch.pi,
                                                             dtype=mean.dtype)))
        log_prob = log_prob - torch.log(1.0 - action ** 2 + 1e-6)
        return action, log_prob.sum(dim=-1), pre_tanh

    def deterministic(self, features):
        mean, _ = self.distribution_params(features)
        return torch.tanh(mean)


class TwinCritic(nn.Module):
    def __init__(self, feature_dim, hidden=(64, 64)):
        super().__init__()
        self.q1 = mlp((feature_dim + ACTION_DIM, *hidden, 1))
        self.q2 = mlp((feature_dim + ACTION_DIM, *hidden, 1))

    def forward(self, features, action):
        x = torch.cat([features, action], dim=-1)
        return self.q1(x).squeeze(-1), self.q2(x).squeeze(-1)

    def min_q(self, features, action):
        q1, q2 = self(features, action)
        return torch.min(q1, q2)
