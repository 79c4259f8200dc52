"""Seeded Monte Carlo engine for diffusion and self-aware social learning.

Trial ``t`` draws all of its signals from
``PCG64(SeedSequence(base_seed, spawn_key=(t,)))``: the child seed is a pure
function of ``(base_seed, t)``, so traces do not depend on the thread count or
on which trials run together.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _pykernel
from .diag import trace_diagnostics
from .errors import ValidationError, WindowTooLong, ZeroEvidence
from .kernels import get_kernel


class Model(str, Enum):
    DIFFUSION = "diffusion"
    SELF_AWARE = "self-aware"


@dataclass(frozen=True)
class SimulationConfig:
    model: Model = Model.DIFFUSION
    steps: int = 7000
    trials: int = 1
    base_seed: int = 0
    record_stride: int = 1
    awareness: object = None
    threads: int = 1
    record_forecasts: bool = True
    record_diagnostics: bool = True
    backend: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        if self.steps < 0:
            raise ValidationError("simulation", "steps must be non-negative")
        if self.trials < 1:
            raise ValidationError("simulation", "trials must be at least 1")
        if self.record_stride < 1:
            raise ValidationError("simulation", "record stride must be at least 1")
        if self.steps % self.record_stride:
            raise ValidationError("simulation", "record stride must divide the number of steps")
        if self.threads < 1:
            raise ValidationError("simulation", "threads must be at least 1")
        if not 0 <= self.base_seed < 2**64:
            raise ValidationError("simulation", "base seed must be a 64-bit unsigned integer")


@dataclass
class SimulationTrace:
    """Recorded beliefs, indexed ``[trial, record, agent, state]``."""

    times: np.ndarray
    beliefs: np.ndarray
    states: tuple
    labels: tuple
    seeds: tuple
    model: Model
    signal_names: tuple = ()
    forecasts: np.ndarray | None = None
    diagnostics: dict | None = None

    @property
    def n_trials(self):
        return self.beliefs.shape[0]

    @property
    def n_agents(self):
        return self.beliefs.shape[2]

    @property
    def steps(self):
        return int(self.times[-1])

    def final(self):
        """``(trials, N, M)`` beliefs at the last recorded time."""
        return self.beliefs[:, -1]


def child_rng(base_seed, trial):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(base_seed, spawn_key=(trial,))))


def _cdfs(models, agent_truth):
    return [np.cumsum(models[k].table[agent_truth[k]]) for k in range(models.n_agents)]


def _draw(cdf, u):
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)


def sample_signal(models, agent, truth, rng):
    """One draw from ``L_agent(. | truth)``, as a signal index."""
    return int(_draw(np.cumsum(models[agent].table[truth]), rng.random()))


def draw_signals(models, agent_truth, steps, rng):
    """``(steps, N)`` signal indices; row ``i - 1`` holds the signals seen at time ``i``."""
    n = models.n_agents
    u = rng.random((steps, n))
    out = np.empty((steps, n), dtype=np.int64)
    for k, cdf in enumerate(_cdfs(models, agent_truth)):
        out[:, k] = _draw(cdf, u[:, k])
    return out


def step(beliefs, signals, matrix, models, gamma=None, time=None):
    """One synchronous round for all agents.

    Every agent first forms its intermediate belief (Bayesian, or self-aware
    when ``gamma`` is given), then all agents combine.
    """
    mu = np.array(beliefs, dtype=float)
    n = mu.shape[0]
    g = np.ones(n) if gamma is None else np.broadcast_to(np.asarray(gamma, float), (n,))
    psi, bad = _pykernel.advance(mu, models.padded(), np.asarray(signals, dtype=np.int64), g)
    if bad >= 0:
        raise ZeroEvidence(agent=bad, time=time, signal=int(signals[bad]))
    w = matrix.weights if hasattr(matrix, "weights") else np.asarray(matrix, float)
    return _pykernel.clamp_underflow(_pykernel.combine(psi, w))


def _gamma_table(scenario, config):
    n = scenario.matrix.n_agents
    if config.model is Model.DIFFUSION:
        return np.ones((config.steps, n))
    schedule = config.awareness if config.awareness is not None else scenario.awareness
    if schedule is None:
        raise ValidationError("simulation", "self-aware model requires an awareness schedule")
    if schedule.n_agents != n:
        raise ValidationError("awareness", f"schedule covers {schedule.n_agents} agents, need {n}")
    return np.ascontiguousarray(schedule.table(config.steps), dtype=float)


def run(scenario, config):
    """Run ``config.trials`` independent trials of ``scenario``.

    Raises
    ------
    ZeroEvidence
        If an agent observes a signal impossible under its current belief; the
        error names the agent label, the time and the trial.
    """
    kernel = get_kernel(config.backend)
    weights = np.ascontiguousarray(scenario.matrix.weights, dtype=float)
    lik = np.ascontiguousarray(scenario.models.padded())
    truth = np.asarray(scenario.agent_truth)
    mu0 = np.ascontiguousarray(scenario.priors, dtype=float)
    gamma = _gamma_table(scenario, config)
    stride = config.record_stride

    def one(trial):
        rng = child_rng(config.base_seed, trial)
        signals = draw_signals(scenario.models, truth, config.steps, rng)
        out, bad_agent, bad_time = kernel(weights, lik, signals, gamma, mu0, stride)
        if bad_agent >= 0:
            err = ZeroEvidence(agent=scenario.matrix.labels[bad_agent], time=bad_time,
                               signal=int(signals[bad_time - 1, bad_agent]))
            err.trial = trial
            raise err
        return out

    if config.threads == 1 or config.trials == 1:
        results = [one(t) for t in range(config.trials)]
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as ex:
            results = list(ex.map(one, range(config.trials)))

    beliefs = np.stack(results)
    times = np.arange(0, config.steps + 1, stride)
    trace = SimulationTrace(
        times=times,
        beliefs=beliefs,
        states=scenario.space.states,
        labels=scenario.matrix.labels,
        seeds=tuple((config.base_seed, t) for t in range(config.trials)),
        model=config.model,
        signal_names=tuple(a.signals for a in scenario.models.agents),
    )
    if config.record_forecasts:
        trace.forecasts = np.einsum("abkm,kmz->abkz", beliefs, lik)
    if config.record_diagnostics:
        tables = [a.table for a in scenario.models.agents]
        trace.diagnostics = trace_diagnostics(beliefs, tables, truth,
                                              scenario.truth.sending_states)
    return trace


@dataclass
class AgentConvergence:
    agent: int
    label: str
    empirical: np.ndarray
    predicted: np.ndarray
    deviation: float
    oscillation: np.ndarray
    inside_band: bool | None = None

    @property
    def oscillation_score(self):
        return float(np.max(self.oscillation))

    @property
    def band_violation(self):
        return None if self.inside_band is None else not self.inside_band


@dataclass
class ConvergenceReport:
    window: int
    samples: int
    agents: list = field(default_factory=list)
    sending_truth_belief: dict = field(default_factory=dict)
    model: Model = Model.DIFFUSION

    @property
    def max_deviation(self):
        return max((a.deviation for a in self.agents), default=0.0)

    def worst(self):
        return max(self.agents, key=lambda a: a.deviation, default=None)


def default_window(steps, stride):
    return min(steps, max(math.ceil(0.1 * steps), 100 * stride))


def assess(trace, prediction, bands=None, window=None):
    """Compare trailing-window behaviour of receiving agents with a prediction.

    ``window`` is in steps (default: last 10% of the run, at least 100
    samples).  Oscillation is the per-state sample variance over the window,
    averaged over trials.  Band membership uses the unclamped bounds and is
    reported only for self-aware traces.
    """
    steps = trace.steps
    stride = int(trace.times[1] - trace.times[0]) if len(trace.times) > 1 else 1
    if window is None:
        window = default_window(steps, stride)
    if window > steps:
        raise WindowTooLong(f"window of {window} steps exceeds the {steps} recorded steps")
    sel = trace.times > steps - window if window > 0 else trace.times == steps
    block = trace.beliefs[:, sel]
    mean = block.mean(axis=(0, 1))
    var = block.var(axis=1, ddof=1).mean(axis=0) if block.shape[1] > 1 else np.zeros_like(mean)

    use_bands = bands is not None and trace.model is Model.SELF_AWARE
    report = ConvergenceReport(window=window, samples=int(sel.sum()), model=trace.model)
    for j, k in enumerate(prediction.receiving_agents):
        emp = mean[k]
        inside = None
        if use_bands:
            row = bands.agents.index(k)
            inside = bool(np.all((emp >= bands.raw_lower[row]) & (emp <= bands.raw_upper[row])))
        report.agents.append(AgentConvergence(
            agent=k,
            label=trace.labels[k],
            empirical=emp,
            predicted=np.array(prediction.beliefs[k]),
            deviation=float(np.max(np.abs(emp - prediction.beliefs[k]))),
            oscillation=var[k],
            inside_band=inside,
        ))
    final = trace.final().mean(axis=0)
    for k in prediction.sending_agents:
        s = int(np.argmax(prediction.beliefs[k]))
        report.sending_truth_belief[k] = float(final[k, s])
    return report
