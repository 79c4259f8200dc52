"""Learning-progress functionals: regrets, aggregate risk, forecast KL, ``h``.

Natural logarithms throughout, with ``0 log 0 = 0``.
"""

from __future__ import annotations

from enum import Enum
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedKL, UndefinedRegret, ZeroEvidence


class DiagnosticKind(str, Enum):
    REGRET_WEAK = "regret_weak"
    REGRET_TRUE = "regret_true"
    AGGREGATE_RISK = "aggregate_risk"
    FORECAST_KL = "forecast_kl"
    H_VALUE = "h_value"


@dataclass(frozen=True)
class DiagnosticValue:
    kind: DiagnosticKind
    value: float
    agent: int | None = None
    time: int | None = None


def regret_weak(belief, true_set):
    """``-log`` of the mass placed on the sending blocks' true states."""
    mass = float(np.sum(np.asarray(belief, dtype=float)[list(true_set)]))
    if mass <= 0:
        raise UndefinedRegret("belief puts no mass on the set of sending true states")
    return max(0.0, -np.log(mass))


def regret_true(belief, truth):
    mass = float(np.asarray(belief, dtype=float)[truth])
    if mass <= 0:
        raise UndefinedRegret("belief puts no mass on the true state")
    return max(0.0, -np.log(mass))


def aggregate_risk(regrets, perron):
    """Perron-weighted sum of per-agent regrets (or risks)."""
    return float(np.dot(np.asarray(perron, dtype=float), np.asarray(regrets, dtype=float)))


def risk_estimate(regrets, perron):
    """Monte Carlo estimate of the aggregate risk and its standard error.

    ``regrets`` has shape ``(trials, N)``; each trial contributes one weighted
    sum and the estimator is their mean.
    """
    per_trial = np.asarray(regrets, dtype=float) @ np.asarray(perron, dtype=float)
    n = per_trial.shape[0]
    se = per_trial.std(ddof=1) / np.sqrt(n) if n > 1 else np.nan
    return float(per_trial.mean()), float(se)


def kl_divergence(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    support = p > 0
    if np.any(q[support] <= 0):
        raise UndefinedKL("forecast assigns zero probability to a possible signal")
    return max(0.0, float(np.sum(p[support] * np.log(p[support] / q[support]))))


def forecast_kl(table, belief, truth):
    """KL divergence from the true signal distribution to the agent's forecast."""
    table = np.asarray(table, dtype=float)
    return kl_divergence(table[truth], np.asarray(belief, dtype=float) @ table)


def h_value(belief, table, state, signal, tau):
    """``tau * mu(state) * (L(signal|state) / sum_t mu(t) L(signal|t) - 1)``."""
    belief = np.asarray(belief, dtype=float)
    lik = np.asarray(table, dtype=float)[:, signal]
    den = float(belief @ lik)
    if den <= 0:
        raise ZeroEvidence(signal=signal)
    return tau * belief[state] * (lik[state] / den - 1.0)


def trace_diagnostics(beliefs, tables, agent_truth, true_set):
    """Vectorized regrets and forecast KL for stacked beliefs ``(..., N, M)``.

    Undefined values (zero mass where a logarithm needs it) come back as
    ``inf`` rather than raising, so long traces can be summarized.
    """
    b = np.asarray(beliefs, dtype=float)
    n = b.shape[-2]
    idx = np.arange(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        at_truth = b[..., idx, agent_truth]
        rt = np.maximum(0.0, -np.log(at_truth))
        rw = np.maximum(0.0, -np.log(b[..., list(true_set)].sum(axis=-1)))
        kl = np.empty(b.shape[:-1])
        for k in range(n):
            t = tables[k]
            p = t[agent_truth[k]]
            m = b[..., k, :] @ t
            sup = p > 0
            terms = p[sup] * np.log(p[sup] / m[..., sup])
            kl[..., k] = np.maximum(0.0, terms.sum(axis=-1))
    return {"regret_true": rt, "regret_weak": rw, "forecast_kl": kl}
