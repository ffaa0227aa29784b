"""Scalar stress metrics over per-particle Cauchy stress tensors.

The solver hands back one 3x3 Cauchy tensor per particle; everything downstream
(reward, evaluation, UI heatmaps) consumes the Von Mises scalar and a small set
of aggregates of it: mean, median, top-K% mean, top-K% median, and max.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractViolation, DegenerateTopKError

# K values used throughout the pipeline: the reward reads the top-10% median,
# evaluation reports the top-5% mean.
REWARD_TOP_K = 10.0
EVAL_TOP_K = 5.0


def von_mises(cauchy, sym_tol=1e-6):
    """Von Mises stress of a single 3x3 Cauchy tensor, in Pa.

    Computes sqrt(3/2 * ||dev(sigma)||_F^2) with dev(sigma) = sigma - tr(sigma)/3 * I.
    Zero for any hydrostatic state; equals |s| for uniaxial stress s.

    Raises ContractViolation if the input is asymmetric beyond ``sym_tol``
    (relative to the Frobenius norm, with a small absolute floor).
    """
    s = np.asarray(cauchy, dtype=np.float64)
    if s.shape != (3, 3):
        raise ContractViolation(f"expected a 3x3 tensor, got shape {s.shape}")
    norm = np.linalg.norm(s)
    asym = np.linalg.norm(s - s.T)
    if asym > sym_tol * max(norm, 1e-30) and asym > 1e-12:
        raise ContractViolation(
            f"stress tensor asymmetric: ||s - s^T|| = {asym:.3e} (||s|| = {norm:.3e})"
        )
    dev = s - (np.trace(s) / 3.0) * np.eye(3)
    return float(np.sqrt(1.5) * np.linalg.norm(dev))


def top_k_count(n, k):
    """M = floor(K*N/100); raises when the selection would be empty."""
    if n < 1:
        raise ContractViolation("need at least one stress value")
    if not 0.0 < k < 100.0:
        raise ContractViolation(f"K must lie in (0, 100), got {k}")
    m = int(np.floor(k * n / 100.0))
    if m < 1:
        raise DegenerateTopKError(
            f"floor(K*N/100) = 0 for K={k}, N={n}; choose K*N >= 100"
        )
    return m


def _median_sorted(values):
    # midpoint convention: average of the two central order statistics for even N
    n = values.shape[0]
    mid = n // 2
    if n % 2 == 1:
        return float(values[mid])
    return float(0.5 * (values[mid - 1] + values[mid]))


def aggregate(stresses, metric, k=None):
    """Reduce an array of per-particle scalars with one named statistic.

    ``metric`` is one of ``mean | median | top_k_mean | top_k_median | max``;
    the top-K variants select the M = floor(K*N/100) largest values first.
    Sums run over a sorted copy so the result is exactly order-independent.
    """
    values = np.asarray(stresses, dtype=np.float64).ravel()
    if values.size == 0:
        raise ContractViolation("cannot aggregate an empty stress array")
    values = np.sort(values)
    if metric == "mean":
        return float(values.mean())
    if metric == "max":
        return float(values[-1])
    if metric == "median":
        return _median_sorted(values)
    if metric in ("top_k_mean", "top_k_median"):
        if k is None:
            raise ContractViolation("top-K metrics need an explicit K")
        m = top_k_count(values.size, k)
        top = values[values.size - m:]
        if metric == "top_k_mean":
            return float(top.mean())
        return _median_sorted(top)
    raise ContractViolation(f"unknown metric {metric!r}")


@dataclass(frozen=True)
class StressSummary:
    """The five aggregated stress scalars for one control step, in Pa."""

    mean: float
    median: float
    top_k_mean: float
    top_k_median: float
    max: float
    k_mean: float = EVAL_TOP_K
    k_median: float = REWARD_TOP_K

    @classmethod
    def zeros(cls):
        return cls(0.0, 0.0, 0.0, 0.0, 0.0)

    def as_log_dict(self):
        """Field names fixed by the episode-log schema."""
        return {
            "mean": self.mean,
            "median": self.median,
            "top10_median": self.top_k_median,
            "top5_mean": self.top_k_mean,
            "max": self.max,
        }


def summarize(vm, k_mean=EVAL_TOP_K, k_median=REWARD_TOP_K):
    """All five metrics in one pass over a single sorted copy of ``vm``."""
    values = np.asarray(vm, dtype=np.float64).ravel()
    if values.size == 0:
        raise ContractViolation("cannot summarize an empty stress array")
    m_mean = top_k_count(values.size, k_mean)
    m_median = top_k_count(values.size, k_median)
    s = np.sort(values)  # ascending; top-M slices come off the tail
    return StressSummary(
        mean=float(s.mean()),
        median=_median_sorted(s),
        top_k_mean=float(s[-m_mean:].mean()),
        top_k_median=_median_sorted(s[-m_median:]),
        max=float(s[-1]),
        k_mean=k_mean,
        k_median=k_median,
    )


@dataclass
class EpisodeStressTracker:
    """Running elementwise maximum of each metric over one episode.

    Evaluation reports the episode-maximum of every summary field; the tracker
    is reset on every environment reset.
    """

    peak: StressSummary = None

    def reset(self):
        self.peak = None

    def track(self, summary):
        if self.peak is None:
            self.peak = summary
        else:
            self.peak = replace(
                summary,
                mean=max(self.peak.mean, summary.mean),
                median=max(self.peak.median, summary.median),
                top_k_mean=max(self.peak.top_k_mean, summary.top_k_mean),
                top_k_median=max(self.peak.top_k_median, summary.top_k_median),
                max=max(self.peak.max, summary.max),
            )
        return self.peak

    def snapshot(self):
        return self.peak if self.peak is not None else StressSummary.zeros()
