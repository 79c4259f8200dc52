"""Scenario files, bundled fixtures, assumption checks and trace/report I/O.

Scenario schema (TOML)::

    name = "three_agent"
    description = "..."

    [network]
    agents = 3                       # optional, checked against weights
    labels = ["1", "2", "3"]         # optional
    weights = [[1, 0, 0.1],          # row-major; weights[l][k] is the weight
               [0, 1, 0.2],          # agent k gives to agent l
               [0, 0, 0.7]]

    [states]
    names = ["theta1", "theta2", "theta3"]

    [likelihoods]
    signals = ["H", "T"]             # default signal space
    [likelihoods.by_signal]          # one states-by-agents table per signal;
    H = [["1/10", "1/10", "1/2"],    # the last signal may be omitted and is
         ...]                        # then the complement
    [likelihoods.agent.3]            # per-agent override: states-by-signals
    signals = ["H", "T"]
    table = [[0.4, 0.6], [0.3, 0.7], [0.8, 0.2]]

    [truth]
    agents = ["theta1", "theta2", "theta3"]

    [priors]                         # optional; uniform by default
    beliefs = [[...], ...]           # agents-by-states

    [awareness]                      # optional; enables self-aware runs
    gamma = [0.4, 0.4, 0.1]

Numbers may be written as TOML numbers or as strings holding fractions
(``"5/7"``).
"""

from __future__ import annotations

import csv
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .beliefs import (
    AgentLikelihood,
    AwarenessSchedule,
    LikelihoodModel,
    StateSpace,
    TrueStateAssignment,
    check_pmf,
    globally_identifiable,
    indistinguishable_set,
    prevailing_signal,
    uniform_beliefs,
)
from .errors import ParseError, ValidationError
from .graph import CombinationMatrix, classify, validate
from .sim import Model, SimulationTrace

FIXTURE_ENV = "WEAKSOCIAL_FIXTURES"
_BUNDLED = Path(__file__).with_name("fixtures")


@dataclass(frozen=True, eq=False)
class Scenario:
    matrix: CombinationMatrix
    space: StateSpace
    models: LikelihoodModel
    agent_truth: np.ndarray
    priors: np.ndarray
    awareness: AwarenessSchedule | None = None
    name: str = ""
    description: str = ""

    def __post_init__(self):
        n, m = self.matrix.n_agents, len(self.space)
        if self.models.n_agents != n:
            raise ValidationError("likelihoods", f"{self.models.n_agents} likelihood tables "
                                                 f"for {n} agents")
        if self.models.n_states != m:
            raise ValidationError("likelihoods", f"tables have {self.models.n_states} rows, "
                                                 f"expected {m} states")
        truth = np.array(self.agent_truth, dtype=int)
        if truth.shape != (n,) or np.any(truth < 0) or np.any(truth >= m):
            raise ValidationError("truth", "need one valid true state per agent")
        truth.flags.writeable = False
        object.__setattr__(self, "agent_truth", truth)
        priors = np.array(self.priors, dtype=float)
        if priors.shape != (n, m):
            raise ValidationError("priors", f"expected shape {(n, m)}, got {priors.shape}")
        check_pmf(priors, "priors")
        priors.flags.writeable = False
        object.__setattr__(self, "priors", priors)
        if self.awareness is not None and self.awareness.n_agents != n:
            raise ValidationError("awareness", f"gamma covers {self.awareness.n_agents} agents, "
                                               f"need {n}")
        self.truth  # noqa: B018 - classify and check per-block truths eagerly

    @cached_property
    def partition(self):
        return classify(self.matrix)

    @cached_property
    def truth(self):
        return TrueStateAssignment.from_agents(self.agent_truth, self.partition)

    @property
    def default_model(self):
        return Model.SELF_AWARE if self.awareness is not None else Model.DIFFUSION

    def __eq__(self, other):
        return (isinstance(other, Scenario)
                and self.matrix.labels == other.matrix.labels
                and np.array_equal(self.matrix.weights, other.matrix.weights)
                and self.space == other.space
                and self.models == other.models
                and np.array_equal(self.agent_truth, other.agent_truth)
                and np.array_equal(self.priors, other.priors)
                and self.awareness == other.awareness
                and self.name == other.name
                and self.description == other.description)


def _num(x, where):
    if isinstance(x, bool):
        raise ValidationError(where, f"expected a number, got {x!r}")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        try:
            return float(Fraction(x.strip()))
        except (ValueError, ZeroDivisionError):
            pass
    raise ValidationError(where, f"expected a number or fraction, got {x!r}")


def _matrix(rows, where, shape=None):
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ValidationError(where, "expected a list of rows")
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise ValidationError(where, "rows have different lengths")
    out = np.array([[_num(x, where) for x in r] for r in rows], dtype=float)
    if shape is not None and out.shape != shape:
        raise ValidationError(where, f"expected shape {shape}, got {out.shape}")
    return out


def _section(doc, name, required=True):
    sec = doc.get(name)
    if sec is None:
        if required:
            raise ValidationError(name, f"missing [{name}] section")
        return {}
    if not isinstance(sec, dict):
        raise ValidationError(name, f"[{name}] must be a table")
    return sec


def _likelihoods(sec, labels, m):
    n = len(labels)
    default_signals = tuple(str(s) for s in sec.get("signals", ("H", "T")))
    tables = [None] * n
    signals = [default_signals] * n
    by_signal = sec.get("by_signal")
    if by_signal is not None:
        given = [s for s in default_signals if s in by_signal]
        unknown = set(by_signal) - set(default_signals)
        if unknown:
            raise ValidationError("likelihoods", f"unknown signals {sorted(unknown)}")
        if len(given) < len(default_signals) - 1 or (
                len(given) == len(default_signals) - 1 and default_signals[-1] in given):
            raise ValidationError("likelihoods", "by_signal may omit only the last signal")
        mats = [_matrix(by_signal[s], "likelihoods", (m, n)) for s in given]
        if len(mats) < len(default_signals):
            mats.append(1.0 - sum(mats))
        stacked = np.stack(mats, axis=2)  # (M, N, Z)
        for k in range(n):
            tables[k] = stacked[:, k, :]
    per_agent = sec.get("agent", {})
    for label, entry in per_agent.items():
        if str(label) not in labels:
            raise ValidationError("likelihoods", f"table for unknown agent {label!r}")
        k = labels.index(str(label))
        sig = tuple(str(s) for s in entry.get("signals", default_signals))
        if "table" not in entry:
            raise ValidationError("likelihoods", f"agent {label}: missing table")
        tables[k] = _matrix(entry["table"], f"likelihoods.agent.{label}", (m, len(sig)))
        signals[k] = sig
    missing = [labels[k] for k in range(n) if tables[k] is None]
    if missing:
        raise ValidationError("likelihoods", f"no likelihood table for agents {missing}")
    try:
        return LikelihoodModel([AgentLikelihood(s, t) for s, t in zip(signals, tables)])
    except ValidationError as exc:
        raise ValidationError("likelihoods", exc.detail) from None


def from_dict(doc):
    """Build a :class:`Scenario` from an already-parsed document."""
    net = _section(doc, "network")
    if "weights" not in net:
        raise ValidationError("network", "missing weights")
    weights = _matrix(net["weights"], "network")
    if "agents" in net and int(net["agents"]) != weights.shape[0]:
        raise ValidationError("network", f"agents = {net['agents']} but weights have "
                                         f"{weights.shape[0]} rows")
    matrix = validate(weights, net.get("labels"))
    labels = list(matrix.labels)
    n = matrix.n_agents

    states = _section(doc, "states")
    if "names" not in states:
        raise ValidationError("states", "missing names")
    space = StateSpace(tuple(states["names"]))
    m = len(space)

    models = _likelihoods(_section(doc, "likelihoods"), labels, m)

    truth_sec = _section(doc, "truth")
    agents = truth_sec.get("agents")
    if not isinstance(agents, list) or len(agents) != n:
        raise ValidationError("truth", f"agents must list {n} true states")
    truth = [space.index(s) for s in agents]

    prior_sec = _section(doc, "priors", required=False)
    if "beliefs" in prior_sec:
        priors = _matrix(prior_sec["beliefs"], "priors", (n, m))
    else:
        priors = uniform_beliefs(n, m)

    aware = _section(doc, "awareness", required=False)
    awareness = None
    if aware:
        g = aware.get("gamma")
        if g is None:
            raise ValidationError("awareness", "missing gamma")
        g = np.array(g, dtype=object)
        vals = (np.array([_num(x, "awareness") for x in g]) if g.ndim == 1
                else _matrix(g.tolist(), "awareness"))
        awareness = AwarenessSchedule(vals)

    return Scenario(matrix, space, models, truth, priors, awareness,
                    name=str(doc.get("name", "")), description=str(doc.get("description", "")))


def loads(text):
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(getattr(exc, "lineno", None), getattr(exc, "msg", str(exc))) from None
    return from_dict(doc)


def fixture_dir():
    return Path(os.environ.get(FIXTURE_ENV) or _BUNDLED)


def list_fixtures():
    return sorted(p.stem for p in fixture_dir().glob("*.toml"))


def resolve(path):
    """Map a path or a fixture name (``three_agent``, ``fixtures/three_agent``) to a file."""
    p = Path(path)
    if p.is_file():
        return p
    for base in (fixture_dir(), _BUNDLED):
        cand = base / (p.name if p.suffix == ".toml" else p.name + ".toml")
        if cand.is_file():
            return cand
    raise FileNotFoundError(f"no scenario file or fixture named {str(path)!r}")


def load(path):
    p = resolve(path)
    scenario = loads(p.read_text(encoding="utf-8"))
    if not scenario.name:
        object.__setattr__(scenario, "name", p.stem)
    return scenario


def load_fixture(name):
    return load(_BUNDLED / f"{name}.toml")


def to_dict(scenario):
    """Canonical document: per-agent likelihood tables, explicit priors."""
    labels = scenario.matrix.labels
    doc = {
        "name": scenario.name,
        "description": scenario.description,
        "network": {
            "agents": scenario.matrix.n_agents,
            "labels": list(labels),
            "weights": scenario.matrix.weights.tolist(),
        },
        "states": {"names": list(scenario.space.states)},
        "likelihoods": {
            "agent": {
                label: {"signals": list(a.signals), "table": a.table.tolist()}
                for label, a in zip(labels, scenario.models.agents)
            }
        },
        "truth": {"agents": [scenario.space.states[t] for t in scenario.agent_truth]},
        "priors": {"beliefs": scenario.priors.tolist()},
    }
    if scenario.awareness is not None:
        doc["awareness"] = {"gamma": scenario.awareness.gamma.tolist()}
    return doc


def dumps(scenario):
    return tomli_w.dumps(to_dict(scenario))


def save(scenario, path):
    Path(path).write_text(dumps(scenario), encoding="utf-8")


@dataclass
class BlockStatus:
    """Truth-learning preconditions for one sending sub-network."""

    agents: tuple
    true_state: str
    identifiable: bool
    witness: tuple
    prevailing: dict
    positive_prior: str | None
    awareness_ok: bool = True

    @property
    def learns(self):
        # An isolated agent is a plain Bayesian learner: identifiability and a
        # positive prior suffice, with or without a prevailing signal.
        prevailing_ok = len(self.agents) == 1 or all(v is not None for v in self.prevailing.values())
        return self.identifiable and self.positive_prior is not None and prevailing_ok


@dataclass
class ReceivingStatus:
    agent: str
    true_state: str
    indistinguishable: tuple
    holds: bool
    missing: tuple


@dataclass
class AssumptionReport:
    sending: list = field(default_factory=list)
    receiving: list = field(default_factory=list)
    regime: str = "none"

    @property
    def assumption_holds(self):
        return all(r.holds for r in self.receiving)

    @property
    def sending_learns(self):
        return all(b.learns for b in self.sending)

    def applicable(self, model):
        """Which limit result applies under ``model``: ``"total-influence"``,
        ``"confinement"``, ``"strong"`` (no receiving agents) or ``"none"``."""
        model = Model(model)
        if not self.sending_learns:
            return "none"
        if model is Model.SELF_AWARE and not all(b.awareness_ok for b in self.sending):
            return "none"
        if not self.receiving:
            return "strong"
        if model is Model.DIFFUSION:
            return "total-influence" if self.assumption_holds else "none"
        return "confinement"

    def as_dict(self):
        return {
            "regime": self.regime,
            "assumption_holds": self.assumption_holds,
            "sending": [dict(b.__dict__, witness=list(b.witness), agents=list(b.agents),
                             learns=b.learns) for b in self.sending],
            "receiving": [dict(r.__dict__, indistinguishable=list(r.indistinguishable),
                               missing=list(r.missing)) for r in self.receiving],
        }


def check_assumptions(scenario):
    """Evaluate the learning preconditions without simulating."""
    part, truth, models = scenario.partition, scenario.truth, scenario.models
    labels, names = scenario.matrix.labels, scenario.space.states
    report = AssumptionReport()
    for block, state in zip(part.sending_blocks, truth.sending):
        ok, witness = globally_identifiable(models, block, state)
        prev = {}
        for k in block:
            z = prevailing_signal(models, k, state)
            prev[labels[k]] = None if z is None else models[k].signals[z]
        positive = next((labels[k] for k in block if scenario.priors[k, state] > 0), None)
        aware_ok = True
        if scenario.awareness is not None:
            last = scenario.awareness.gamma if scenario.awareness.constant else scenario.awareness.gamma[-1]
            aware_ok = bool(all(last[k] > 0 for k in block))
        report.sending.append(BlockStatus(
            agents=tuple(labels[k] for k in block),
            true_state=names[state],
            identifiable=ok,
            witness=tuple(names[t] for t in sorted(witness)),
            prevailing=prev,
            positive_prior=positive,
            awareness_ok=aware_ok,
        ))
    for block, own in zip(part.receiving_blocks, truth.receiving):
        for k in block:
            same = indistinguishable_set(models, k, own)
            missing = tuple(names[s] for s in truth.sending_states if s not in same)
            report.receiving.append(ReceivingStatus(
                agent=labels[k],
                true_state=names[own],
                indistinguishable=tuple(names[t] for t in sorted(same)),
                holds=not missing,
                missing=missing,
            ))
    report.regime = report.applicable(scenario.default_model)
    return report


def _fmt(x):
    return repr(float(x))


def export_trace(trace, path, forecasts=True, diagnostics=True):
    """Write one CSV row per (trial, time, agent)."""
    forecasts = forecasts and trace.forecasts is not None
    diagnostics = diagnostics and trace.diagnostics is not None
    zmax = trace.forecasts.shape[-1] if forecasts else 0
    diag_keys = sorted(trace.diagnostics) if diagnostics else []
    header = ["trial", "time", "agent"] + [f"mu[{s}]" for s in trace.states]
    header += [f"m_{j + 1}" for j in range(zmax)] + diag_keys
    nsig = [len(s) for s in trace.signal_names] if trace.signal_names else [zmax] * trace.n_agents
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t in range(trace.n_trials):
            for r, time in enumerate(trace.times):
                for k in range(trace.n_agents):
                    row = [t, int(time), trace.labels[k]]
                    row += [_fmt(x) for x in trace.beliefs[t, r, k]]
                    if forecasts:
                        row += [_fmt(trace.forecasts[t, r, k, j]) if j < nsig[k] else ""
                                for j in range(zmax)]
                    row += [_fmt(trace.diagnostics[d][t, r, k]) for d in diag_keys]
                    w.writerow(row)


def read_trace(path):
    """Read a CSV written by :func:`export_trace` back into a trace."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    states = tuple(h[3:-1] for h in header if h.startswith("mu["))
    m = len(states)
    fcols = [i for i, h in enumerate(header) if h.startswith("m_")]
    dcols = [(i, h) for i, h in enumerate(header) if i >= 3 + m + len(fcols)]
    trials = sorted({int(r[0]) for r in body})
    times = sorted({int(r[1]) for r in body})
    labels = list(dict.fromkeys(r[2] for r in body))
    shape = (len(trials), len(times), len(labels))
    beliefs = np.empty(shape + (m,))
    fc = np.full(shape + (len(fcols),), np.nan) if fcols else None
    dg = {h: np.empty(shape) for _, h in dcols} if dcols else None
    tpos = {t: i for i, t in enumerate(times)}
    lpos = {lab: i for i, lab in enumerate(labels)}
    for r in body:
        idx = (int(r[0]), tpos[int(r[1])], lpos[r[2]])
        beliefs[idx] = [float(x) for x in r[3:3 + m]]
        if fcols:
            fc[idx] = [float(r[i]) if r[i] else np.nan for i in fcols]
        for i, h in dcols:
            dg[h][idx] = float(r[i])
    return SimulationTrace(
        times=np.array(times),
        beliefs=beliefs,
        states=states,
        labels=tuple(labels),
        seeds=(),
        model=None,
        forecasts=fc,
        diagnostics=dg,
    )


def write_report(path, payload, text=None):
    """Write a report as JSON (``.json`` suffix) or plain text."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(payload, indent=2, default=_jsonable) + "\n", encoding="utf-8")
    else:
        path.write_text(text if text is not None else json.dumps(payload, indent=2,
                                                                 default=_jsonable),
                        encoding="utf-8")
    return path


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (set, frozenset, tuple)):
        return list(x)
    raise TypeError(f"not JSON serializable: {type(x).__name__}")
