"""Belief machinery: state spaces, likelihoods, Bayesian/diffusion updates.

Beliefs are plain float arrays: one pmf over the states per agent, stacked as
an ``(N, M)`` array when all agents are handled at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError, ZeroEvidence

PMF_TOL = 1e-12
INDISTINGUISHABLE_TOL = 1e-9


@dataclass(frozen=True)
class StateSpace:
    states: tuple

    def __post_init__(self):
        states = tuple(str(s) for s in self.states)
        if not states:
            raise ValidationError("states", "state space must not be empty")
        if len(set(states)) != len(states):
            raise ValidationError("states", "duplicate state identifiers")
        object.__setattr__(self, "states", states)

    @property
    def size(self):
        return len(self.states)

    def __len__(self):
        return len(self.states)

    def index(self, state):
        if isinstance(state, (int, np.integer)) and not isinstance(state, bool):
            if 0 <= state < len(self.states):
                return int(state)
            raise ValidationError("states", f"state index {state} out of range")
        try:
            return self.states.index(str(state))
        except ValueError:
            raise ValidationError("states", f"unknown state {state!r}") from None


@dataclass(frozen=True)
class AgentLikelihood:
    """``table[t, z] = L(signal z | state t)`` for one agent."""

    signals: tuple
    table: np.ndarray

    def __post_init__(self):
        signals = tuple(str(s) for s in self.signals)
        table = np.array(self.table, dtype=float)
        if table.ndim != 2 or table.shape[1] != len(signals) or not signals:
            raise ValidationError("likelihoods", f"table shape {table.shape} does not match "
                                                 f"{len(signals)} signals")
        if len(set(signals)) != len(signals):
            raise ValidationError("likelihoods", "duplicate signal identifiers")
        if np.any(table < 0) or not np.all(np.isfinite(table)):
            raise ValidationError("likelihoods", "likelihoods must be finite and non-negative")
        sums = table.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > PMF_TOL)
        if bad.size:
            raise ValidationError("likelihoods",
                                  f"row for state {bad[0]} sums to {sums[bad[0]]:.15g}")
        table.flags.writeable = False
        object.__setattr__(self, "signals", signals)
        object.__setattr__(self, "table", table)

    @property
    def n_signals(self):
        return len(self.signals)

    def signal_index(self, signal):
        if isinstance(signal, (int, np.integer)):
            return int(signal)
        return self.signals.index(str(signal))


class LikelihoodModel:
    """Per-agent likelihood tables over a shared state space."""

    def __init__(self, agents, n_states=None):
        self.agents = tuple(a if isinstance(a, AgentLikelihood) else AgentLikelihood(*a)
                            for a in agents)
        if not self.agents:
            raise ValidationError("likelihoods", "no agents")
        m = {a.table.shape[0] for a in self.agents}
        if len(m) != 1 or (n_states is not None and m != {n_states}):
            raise ValidationError("likelihoods", "every agent needs one row per state")
        self.n_states = m.pop()

    @classmethod
    def from_tables(cls, tables, signals=("H", "T")):
        return cls([AgentLikelihood(signals, t) for t in tables])

    def __len__(self):
        return len(self.agents)

    def __getitem__(self, k):
        return self.agents[k]

    @property
    def n_agents(self):
        return len(self.agents)

    @property
    def max_signals(self):
        return max(a.n_signals for a in self.agents)

    def padded(self):
        """Dense ``(N, M, Zmax)`` array; missing signals have zero likelihood."""
        out = np.zeros((self.n_agents, self.n_states, self.max_signals))
        for k, a in enumerate(self.agents):
            out[k, :, : a.n_signals] = a.table
        return out

    def __eq__(self, other):
        return (isinstance(other, LikelihoodModel)
                and len(self.agents) == len(other.agents)
                and all(a.signals == b.signals and np.array_equal(a.table, b.table)
                        for a, b in zip(self.agents, other.agents)))


@dataclass(frozen=True)
class TrueStateAssignment:
    """One true state per sub-network (sending blocks, then receiving blocks)."""

    sending: tuple
    receiving: tuple
    agent_truth: np.ndarray

    @classmethod
    def from_agents(cls, agent_truth, partition):
        truth = np.asarray(agent_truth, dtype=int)
        if truth.shape != (len(partition.permutation),):
            raise ValidationError("truth", "need exactly one true state per agent")

        def block_truth(block):
            vals = {int(truth[k]) for k in block}
            if len(vals) != 1:
                raise ValidationError("truth", f"agents {[k + 1 for k in block]} belong to one "
                                               "sub-network but have different true states")
            return vals.pop()

        truth = truth.copy()
        truth.flags.writeable = False
        return cls(tuple(block_truth(b) for b in partition.sending_blocks),
                   tuple(block_truth(b) for b in partition.receiving_blocks),
                   truth)

    @property
    def sending_states(self):
        """Distinct true states of the sending sub-networks, sorted."""
        return tuple(sorted(set(self.sending)))

    def complement(self, n_states):
        s = set(self.sending)
        return tuple(t for t in range(n_states) if t not in s)


class AwarenessSchedule:
    """Self-awareness weights ``gamma[k]`` (constant) or ``gamma[i, k]`` per time.

    A time table with fewer rows than the run length repeats its last row.
    """

    def __init__(self, gamma):
        g = np.array(gamma, dtype=float)
        if g.ndim not in (1, 2) or g.size == 0:
            raise ValidationError("awareness", "gamma must be a vector or a (time, agent) table")
        if np.any(g < 0) or np.any(g > 1) or not np.all(np.isfinite(g)):
            raise ValidationError("awareness", "gamma values must lie in [0, 1]")
        g.flags.writeable = False
        self.gamma = g

    @property
    def n_agents(self):
        return self.gamma.shape[-1]

    @property
    def constant(self):
        return self.gamma.ndim == 1

    @property
    def gamma_max(self):
        return float(self.gamma.max())

    def gamma_max_over(self, agents):
        agents = list(agents)
        if not agents:
            return 0.0
        return float(self.gamma[..., agents].max())

    def table(self, steps):
        """``(steps, N)`` array; row ``i - 1`` holds the weights used at time ``i``."""
        if self.constant:
            return np.broadcast_to(self.gamma, (steps, self.n_agents)).copy()
        g = self.gamma
        if g.shape[0] >= steps:
            return g[:steps].copy()
        pad = np.broadcast_to(g[-1], (steps - g.shape[0], g.shape[1]))
        return np.vstack([g, pad])

    def tau(self, agents=None):
        """Normalized weights ``gamma / gamma_max`` (zeros when ``gamma_max`` is 0)."""
        gmax = self.gamma_max if agents is None else self.gamma_max_over(agents)
        if gmax == 0:
            return np.zeros_like(self.gamma)
        return self.gamma / gmax

    def __eq__(self, other):
        return isinstance(other, AwarenessSchedule) and np.array_equal(self.gamma, other.gamma)

    def __repr__(self):
        return f"AwarenessSchedule({self.gamma.tolist()!r})"


def check_pmf(p, what="belief", tol=PMF_TOL):
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or np.any(p > 1 + tol) or np.any(np.abs(p.sum(axis=-1) - 1) > tol):
        raise ValidationError(what, "not a valid probability mass function")
    return p


def uniform_beliefs(n_agents, n_states):
    return np.full((n_agents, n_states), 1.0 / n_states)


def bayesian_update(prior, table, observed):
    """Posterior after observing signal index ``observed``.

    ``table`` is the agent's ``(M, Z)`` likelihood table.
    """
    prior = np.asarray(prior, dtype=float)
    lik = np.asarray(table, dtype=float)[:, observed]
    num = prior * lik
    den = num.sum()
    if den <= 0:
        raise ZeroEvidence(signal=observed)
    return num / den


def self_aware_intermediate(prior, table, observed, gamma):
    """``(1 - gamma) * prior + gamma * bayesian_update(prior, ...)``."""
    prior = np.asarray(prior, dtype=float)
    if not 0 <= gamma <= 1:
        raise ValidationError("awareness", f"gamma {gamma} outside [0, 1]")
    if gamma == 0:
        return prior.copy()
    return (1 - gamma) * prior + gamma * bayesian_update(prior, table, observed)


def diffusion_combine(intermediate, weights):
    """``mu[k] = sum_l a[l, k] psi[l]`` for every agent."""
    w = weights.weights if hasattr(weights, "weights") else np.asarray(weights, float)
    return w.T @ np.asarray(intermediate, dtype=float)


def forecast(belief, table):
    """Predicted distribution of the next signal, ``m(z) = sum_t mu(t) L(z|t)``."""
    return np.asarray(belief, dtype=float) @ np.asarray(table, dtype=float)


def _table(model, agent):
    return model[agent].table if isinstance(model, LikelihoodModel) else np.asarray(model, float)


def indistinguishable_set(model, agent, true_state, tol=INDISTINGUISHABLE_TOL):
    """States whose likelihood rows equal the true state's row for this agent."""
    t = _table(model, agent)
    ref = t[true_state]
    return frozenset(int(s) for s in np.flatnonzero(np.all(np.abs(t - ref) <= tol, axis=1)))


def globally_identifiable(model, block, true_state, tol=INDISTINGUISHABLE_TOL):
    """Whether the block's indistinguishable sets intersect in the true state only.

    Returns ``(flag, witness)`` where ``witness`` is the intersection.
    """
    common = frozenset(range(model.n_states))
    for k in block:
        common &= indistinguishable_set(model, k, true_state, tol)
    return common == {true_state}, common


def prevailing_signal(model, agent, true_state, tol=INDISTINGUISHABLE_TOL):
    """First signal whose likelihood under the truth weakly dominates every
    distinguishable state, or ``None``."""
    t = _table(model, agent)
    same = indistinguishable_set(model, agent, true_state, tol)
    others = [s for s in range(t.shape[0]) if s not in same]
    for z in range(t.shape[1]):
        if all(t[true_state, z] - t[s, z] >= 0 for s in others):
            return z
    return None
