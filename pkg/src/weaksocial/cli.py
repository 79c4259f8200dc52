"""``weaksocial`` command-line interface.

Exit codes: 0 success, 1 invalid input or usage, 2 verification failure,
3 file I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import scenario as sc
from .errors import (
    NoConvergence,
    NotIrreducible,
    NotWeaklyStructured,
    ParseError,
    SingularSystem,
    ValidationError,
    WindowTooLong,
    ZeroEvidence,
)
from .graph import summarize
from .predict import confinement_bands, limiting_beliefs
from .sim import Model, SimulationConfig, assess, run

OK, INVALID, VERIFY_FAILED, IO_ERROR = 0, 1, 2, 3


@dataclass
class CommandOutcome:
    code: int
    summary: str
    artifacts: tuple = ()
    payload: dict = field(default_factory=dict)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags, which would collide with the
    # verification-failure code.
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _rows(matrix, digits=4):
    return "\n".join("  " + "  ".join(f"{x:.{digits}f}" for x in row) for row in np.atleast_2d(matrix))


def _prediction(scen):
    part = scen.partition
    spectral = summarize(scen.matrix, part)
    pred = limiting_beliefs(spectral.W, part, scen.truth, scen.space)
    return spectral, pred


def _receiving_gamma_max(scen, override=None):
    if override is not None:
        return float(override)
    if scen.awareness is None:
        return None
    return scen.awareness.gamma_max_over(scen.partition.receiving_agents)


def _finish(outcome, out=None, as_json=False):
    if out is not None:
        try:
            sc.write_report(out, outcome.payload, outcome.summary + "\n")
        except OSError as exc:
            return CommandOutcome(IO_ERROR, f"cannot write report {out}: {exc}")
        outcome.artifacts = outcome.artifacts + (str(out),)
    if as_json:
        outcome.summary = json.dumps(dict(outcome.payload, exit_code=outcome.code),
                                     indent=2, default=sc._jsonable)
    return outcome


def cmd_analyze(path, out=None, as_json=False):
    scen = sc.load(path)
    part = scen.partition
    labels = scen.matrix.labels
    spectral, _ = _prediction(scen)
    report = sc.check_assumptions(scen)
    lab = lambda block: [labels[k] for k in block]  # noqa: E731

    lines = [f"scenario: {scen.name}  ({scen.matrix.n_agents} agents, {len(scen.space)} states)"]
    for i, (block, y) in enumerate(zip(part.sending_blocks, spectral.perron_vectors), 1):
        lines.append(f"S{i} = {{{', '.join(lab(block))}}}  Perron vector "
                     + " ".join(f"{v:.4f}" for v in y))
    if part.receiving_blocks:
        for i, (block, rho) in enumerate(zip(part.receiving_blocks, spectral.receiving_radii), 1):
            lines.append(f"R{i} = {{{', '.join(lab(block))}}}  spectral radius {rho:.4f}")
        lines.append("W^T (rows: receiving agents, columns: sending agents "
                     + " ".join(lab(part.sending_agents)) + ")")
        for k, row in zip(lab(part.receiving_agents), spectral.W.T):
            lines.append(f"  {k:>4}: " + "  ".join(f"{x:.4f}" for x in row))
        lines.append("C = (I - T_RR^T)^-1")
        lines.append(_rows(spectral.C))
    else:
        lines.append("R: none (no receiving agents; W not defined)")
    lines.append("A_inf")
    lines.append(_rows(spectral.A_inf))
    for w in part.warnings:
        lines.append(f"warning: {w}")
    lines.append(_assumption_text(report))

    payload = {
        "command": "analyze",
        "scenario": scen.name,
        "sending_blocks": [lab(b) for b in part.sending_blocks],
        "receiving_blocks": [lab(b) for b in part.receiving_blocks],
        "perron_vectors": [y.tolist() for y in spectral.perron_vectors],
        "receiving_spectral_radii": list(spectral.receiving_radii),
        "W": spectral.W.tolist() if part.receiving_blocks else None,
        "C": spectral.C.tolist() if part.receiving_blocks else None,
        "A_inf": spectral.A_inf.tolist(),
        "warnings": list(part.warnings),
        "assumptions": report.as_dict(),
    }
    return _finish(CommandOutcome(OK, "\n".join(lines), payload=payload), out, as_json)


def _assumption_text(report):
    lines = ["assumptions:"]
    for b in report.sending:
        state = "learns" if b.learns else "may not learn"
        lines.append(f"  sending {{{', '.join(b.agents)}}} truth {b.true_state}: "
                     f"identifiable={b.identifiable} prevailing={b.prevailing} "
                     f"positive prior at {b.positive_prior} -> {state}")
    for r in report.receiving:
        extra = "" if r.holds else f" (missing {', '.join(r.missing)})"
        lines.append(f"  receiving {r.agent}: sending truths indistinguishable={r.holds}{extra}")
    lines.append(f"  applicable result: {report.regime}")
    return "\n".join(lines)


def cmd_predict(path, gamma_max=None, out=None, as_json=False):
    scen = sc.load(path)
    spectral, pred = _prediction(scen)
    labels, states = scen.matrix.labels, scen.space.states
    gmax = _receiving_gamma_max(scen, gamma_max)
    bands = confinement_bands(pred, spectral.C, gmax) if gmax is not None else None

    lines = ["agent  " + "  ".join(f"{s:>10}" for s in states)]
    for k in range(scen.matrix.n_agents):
        tag = "S" if k in pred.sending_agents else "R"
        lines.append(f"{labels[k]:>4} {tag} " + "  ".join(f"{x:10.4f}" for x in pred.beliefs[k]))
    band_rows = []
    if bands is not None:
        lines.append(f"confinement bands, gamma_max = {gmax:g} (unclamped lower .. upper)")
        for j, k in enumerate(bands.agents):
            lines.append(f"{labels[k]:>4}   " + "  ".join(
                f"{lo:.4f}..{hi:.4f}" for lo, hi in zip(bands.raw_lower[j], bands.raw_upper[j])))
            band_rows.append({"agent": labels[k], "half_width": float(bands.half_width[j]),
                              "raw_lower": bands.raw_lower[j].tolist(),
                              "raw_upper": bands.raw_upper[j].tolist(),
                              "lower": bands.lower[j].tolist(),
                              "upper": bands.upper[j].tolist()})
    payload = {
        "command": "predict",
        "scenario": scen.name,
        "states": list(states),
        "agents": [{"agent": labels[k], "role": "sending" if k in pred.sending_agents else "receiving",
                    "belief": pred.beliefs[k].tolist()} for k in range(scen.matrix.n_agents)],
        "gamma_max": gmax,
        "bands": band_rows,
    }
    return _finish(CommandOutcome(OK, "\n".join(lines), payload=payload), out, as_json)


def _config(scen, args, steps_required=True):
    if steps_required and args.steps < 1:
        raise UsageError("--steps must be at least 1")
    model = Model(args.model) if args.model else scen.default_model
    return SimulationConfig(model=model, steps=args.steps, trials=args.trials,
                            base_seed=args.seed, record_stride=args.stride,
                            threads=args.threads)


def cmd_simulate(path, args):
    scen = sc.load(path)
    config = _config(scen, args)
    trace = run(scen, config)
    out = Path(args.out) if args.out else Path(f"{scen.name}_{config.model.value}.csv")
    try:
        sc.export_trace(trace, out)
    except OSError as exc:
        return CommandOutcome(IO_ERROR, f"cannot write trace {out}: {exc}")
    final = trace.final().mean(axis=0)
    labels, states = scen.matrix.labels, scen.space.states
    lines = [f"{config.model.value} run: {config.steps} steps, {config.trials} trial(s), "
             f"seed {config.base_seed}; trace written to {out}",
             "final belief (mean over trials)",
             "agent  " + "  ".join(f"{s:>10}" for s in states)]
    lines += [f"{labels[k]:>5}  " + "  ".join(f"{x:10.4f}" for x in final[k])
              for k in range(scen.matrix.n_agents)]
    payload = {"command": "simulate", "scenario": scen.name, "model": config.model.value,
               "steps": config.steps, "trials": config.trials, "seed": config.base_seed,
               "trace": str(out), "final_beliefs": final.tolist()}
    return _finish(CommandOutcome(OK, "\n".join(lines), (str(out),), payload),
                   args.report, args.json)


def cmd_verify(path, args):
    scen = sc.load(path)
    config = _config(scen, args)
    report = sc.check_assumptions(scen)
    result = report.applicable(config.model)
    labels, states = scen.matrix.labels, scen.space.states
    payload = {"command": "verify", "scenario": scen.name, "model": config.model.value,
               "applicable": result, "assumptions": report.as_dict()}

    if result == "none":
        why = _no_limit_reason(report, config.model)
        payload.update(passed=False, reason=why)
        return _finish(CommandOutcome(VERIFY_FAILED, f"FAIL: no fixed limit to verify ({why})",
                                      payload=payload), args.out, args.json)

    spectral, pred = _prediction(scen)
    trace = run(scen, config)
    use_bands = config.model is Model.SELF_AWARE
    bands = None
    if use_bands:
        gmax = (scen.awareness.gamma_max_over(scen.partition.receiving_agents)
                if scen.awareness is not None else 0.0)
        bands = confinement_bands(pred, spectral.C, gmax)
    conv = assess(trace, pred, bands, args.window)

    lines = [f"{config.model.value} run, {config.steps} steps, {config.trials} trial(s), "
             f"seed {config.base_seed}; window {conv.window} steps ({conv.samples} samples)",
             "agent  state        predicted  empirical  deviation" + ("  in band" if use_bands else "")]
    rows = []
    for a in conv.agents:
        for s, name in enumerate(states):
            lines.append(f"{a.label:>5}  {name:<10} {a.predicted[s]:10.4f} {a.empirical[s]:10.4f} "
                         f"{abs(a.empirical[s] - a.predicted[s]):10.4f}"
                         + (f"  {a.inside_band}" if use_bands and s == 0 else ""))
        rows.append({"agent": a.label, "predicted": a.predicted.tolist(),
                     "empirical": a.empirical.tolist(), "deviation": a.deviation,
                     "oscillation": a.oscillation.tolist(), "inside_band": a.inside_band})
    for k, v in conv.sending_truth_belief.items():
        lines.append(f"sending {labels[k]}: final belief at its truth {v:.4f}")

    if use_bands:
        failed = [a for a in conv.agents if not a.inside_band]
        passed = not failed
        worst = failed[0] if failed else None
        verdict = ("PASS: every receiving agent inside its confinement band" if passed else
                   f"FAIL: agent {worst.label} leaves its confinement band")
    else:
        worst = conv.worst()
        passed = worst is None or worst.deviation <= args.tol
        verdict = (f"PASS: max deviation {conv.max_deviation:.4f} <= tol {args.tol:g}" if passed else
                   f"FAIL: agent {worst.label} deviates by {worst.deviation:.4f} > tol {args.tol:g}")
    lines.append(verdict)
    payload.update(passed=passed, tol=args.tol, window=conv.window, agents=rows,
                   sending_truth_belief={labels[k]: v for k, v in conv.sending_truth_belief.items()},
                   worst=None if worst is None else worst.label)
    code = OK if passed else VERIFY_FAILED
    return _finish(CommandOutcome(code, "\n".join(lines), payload=payload), args.out, args.json)


def _no_limit_reason(report, model):
    for b in report.sending:
        if not b.learns:
            return f"sending block {{{', '.join(b.agents)}}} does not meet the truth-learning conditions"
        if model is Model.SELF_AWARE and not b.awareness_ok:
            return f"sending block {{{', '.join(b.agents)}}} has zero self-awareness"
    bad = [r for r in report.receiving if not r.holds]
    if bad:
        return (f"receiving agent {bad[0].agent} can distinguish sending truth(s) "
                f"{', '.join(bad[0].missing)} under the diffusion model")
    return "preconditions not met"


def build_parser():
    p = _Parser(prog="weaksocial", description="Social learning over weakly connected networks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("scenario", help="scenario file or bundled fixture name")
        sp.add_argument("--json", action="store_true", help="machine-readable output")

    a = sub.add_parser("analyze", help="partition, spectral objects and assumption report")
    common(a)
    a.add_argument("--out", help="write report (.json for JSON, otherwise text)")

    pr = sub.add_parser("predict", help="limiting beliefs and confinement bands")
    common(pr)
    pr.add_argument("--gamma-max", type=float, default=None,
                    help="band half-width factor (default: receiving agents' max gamma)")
    pr.add_argument("--out")

    def run_flags(sp, seed):
        sp.add_argument("--model", choices=[m.value for m in Model], default=None)
        sp.add_argument("--steps", type=int, default=7000)
        sp.add_argument("--trials", type=int, default=1)
        sp.add_argument("--seed", type=int, default=seed)
        sp.add_argument("--stride", type=int, default=1)
        sp.add_argument("--threads", type=int, default=1)

    s = sub.add_parser("simulate", help="run trials and write a CSV trace")
    common(s)
    run_flags(s, 0)
    s.add_argument("--out", help="trace CSV path (default: <scenario>_<model>.csv)")
    s.add_argument("--report", help="also write the summary (.json or text)")

    v = sub.add_parser("verify", help="compare a simulation against the predicted limit")
    common(v)
    run_flags(v, 1)
    v.add_argument("--tol", type=float, default=0.02)
    v.add_argument("--window", type=int, default=None, help="trailing window in steps")
    v.add_argument("--out")
    return p


def dispatch(argv=None):
    """Parse ``argv`` and run one command; never raises for expected errors."""
    try:
        args = build_parser().parse_args(argv)
        if args.command == "analyze":
            return cmd_analyze(args.scenario, args.out, args.json)
        if args.command == "predict":
            return cmd_predict(args.scenario, args.gamma_max, args.out, args.json)
        if args.command == "simulate":
            return cmd_simulate(args.scenario, args)
        return cmd_verify(args.scenario, args)
    except UsageError as exc:
        return CommandOutcome(INVALID, f"usage error: {exc}")
    except ParseError as exc:
        return CommandOutcome(INVALID, f"parse error: {exc}")
    except ZeroEvidence as exc:
        trial = getattr(exc, "trial", None)
        return CommandOutcome(INVALID, f"simulation stopped: {exc}"
                                       + (f" (trial {trial})" if trial is not None else ""))
    except (ValidationError, NotWeaklyStructured, SingularSystem, NotIrreducible,
            NoConvergence, WindowTooLong) as exc:
        return CommandOutcome(INVALID, f"invalid input: {exc}")
    except OSError as exc:
        return CommandOutcome(IO_ERROR, f"I/O error: {exc}")


def main(argv=None):
    outcome = dispatch(argv)
    stream = sys.stdout if outcome.code in (OK, VERIFY_FAILED) else sys.stderr
    print(outcome.summary, file=stream)
    return outcome.code


if __name__ == "__main__":
    sys.exit(main())
