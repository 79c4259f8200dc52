"""Closed-form limiting beliefs and confinement bands."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LimitPrediction:
    """Predicted limiting belief of every agent, in original agent order.

    Sending agents get a point mass at their block's true state; receiving
    agents get ``q_k``, supported on the sending blocks' true states.
    """

    beliefs: np.ndarray
    sending_agents: tuple
    receiving_agents: tuple
    support: tuple

    def q(self, agent):
        return self.beliefs[agent]

    @property
    def receiving(self):
        """``(N_gR, M)`` rows for receiving agents, canonical order."""
        return self.beliefs[list(self.receiving_agents)]


def limiting_beliefs(W, partition, truth, space):
    """Limit of every agent's belief under total influence.

    For receiving agent ``k`` and each sending block ``s`` the entries of
    column ``k`` of ``W`` that belong to ``s`` are summed into
    ``q_k(truth of s)``; blocks sharing a true state accumulate.
    """
    m = len(space)
    n = len(partition.permutation)
    q = np.zeros((n, m))
    W = np.asarray(W, dtype=float)
    start = 0
    for block, state in zip(partition.sending_blocks, truth.sending):
        stop = start + len(block)
        for k in block:
            q[k, state] = 1.0
        for j, k in enumerate(partition.receiving_agents):
            q[k, state] += W[start:stop, j].sum()
        start = stop
    q.flags.writeable = False
    return LimitPrediction(q, partition.sending_agents, partition.receiving_agents,
                           truth.sending_states)


@dataclass(frozen=True)
class ConfinementBand:
    """Per receiving agent (rows) and state (columns) bounds on the limit.

    ``raw_*`` are the unclamped bounds ``q -/+ gamma_max (C 1)_k``; ``lower`` and
    ``upper`` are clamped to [0, 1].
    """

    agents: tuple
    center: np.ndarray
    half_width: np.ndarray
    raw_lower: np.ndarray
    raw_upper: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def contains(self, values, raw=True):
        """Elementwise membership of ``(N_gR, M)`` values in the band."""
        lo, hi = (self.raw_lower, self.raw_upper) if raw else (self.lower, self.upper)
        v = np.asarray(values)
        return (v >= lo) & (v <= hi)


def confinement_bands(prediction, C, gamma_max):
    C = np.asarray(C, dtype=float)
    center = prediction.receiving
    half = gamma_max * C.sum(axis=1) if C.size else np.zeros(0)
    raw_lo = center - half[:, None]
    raw_hi = center + half[:, None]
    return ConfinementBand(
        agents=prediction.receiving_agents,
        center=center,
        half_width=half,
        raw_lower=raw_lo,
        raw_upper=raw_hi,
        lower=np.clip(raw_lo, 0.0, 1.0),
        upper=np.clip(raw_hi, 0.0, 1.0),
    )


def predicted_social_disagreement(prediction):
    """Total-variation distance between every pair of receiving agents' limits."""
    q = prediction.receiving
    if q.shape[0] == 0:
        return np.zeros((0, 0))
    return 0.5 * np.abs(q[:, None, :] - q[None, :, :]).sum(axis=2)
