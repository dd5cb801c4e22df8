"""Command-line interface.

Three commands share one design source (a builtin case or a JSON config):

* ``pre``       rational baseline/benchmark/value-of-information analysis
                plus the incentive table, before any data exist;
* ``post``      behavioral scores, calibration, and the loss decomposition
                from a trial CSV;
* ``simulate``  synthetic-agent trial CSVs for pipeline testing;
* ``export``    write a builtin case as an editable JSON config.

Commands print a human-readable table to stdout and, with --out, a
machine-readable JSON summary. Identical inputs and seeds produce
byte-identical JSON/CSV outputs. Exit codes: 0 success, 2 input error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agents import AgentSpec, simulate
from .behavioral import (
    DEFAULT_BIN_WIDTH,
    loss_report,
    pooled_loss_report,
    read_trials_csv,
    write_trials_csv,
)
from .cases import CaseStudy, build_case
from .config_io import load_design_config, save_design_config
from .errors import RabenchError
from .model import ExperimentDesign, validate
from .payment import incentive_table
from .rational import rational_report

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTERNAL = 3


def _add_design_source(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--case", choices=("weather", "kale2020", "fernandes2018"),
                       help="builtin case study")
    group.add_argument("--config", type=Path, help="design config JSON")
    parser.add_argument("--scenario", type=int, default=2,
                        help="transit payoff scenario (fernandes2018 only)")
    parser.add_argument("--trial-dists", type=Path, default=None,
                        help="per-trial arrival distribution CSV "
                             "(fernandes2018 only; defaults to the bundled demo)")


def _resolve_design(args) -> tuple[ExperimentDesign, CaseStudy | None]:
    if args.case:
        case = build_case(args.case, scenario=args.scenario,
                          trial_dists=args.trial_dists,
                          grid_step=getattr(args, "grid_step", 0.25))
        return case.design, case
    design = load_design_config(args.config)
    problems = []
    for name in design.strategy_names():
        problems.extend(validate(design.problem(name)))
    if problems:
        raise RabenchError("; ".join(sorted(set(problems))))
    return design, None


def _write_json(payload: dict, out: Path | None) -> None:
    if out is None:
        return
    text = json.dumps(payload, indent=2, sort_keys=True)
    out.write_text(text + "\n", encoding="utf-8")


def _fmt(x: float | None, width: int = 12, digits: int = 4) -> str:
    if x is None:
        return "n/a".rjust(width)
    return f"{x:.{digits}f}".rjust(width)


def _pinned_payload(case: CaseStudy | None) -> dict | None:
    if case is None:
        return None
    return {
        key: {
            "value": pin.value,
            "tol": pin.tol,
            "provenance": pin.provenance,
            **({"note": pin.note} if pin.note else {}),
        }
        for key, pin in case.expected.items()
    }


def cmd_pre(args) -> int:
    design, case = _resolve_design(args)
    report = rational_report(design)

    print(f"design: {design.name}")
    print(f"{'strategy':<16}{'optimal':>12}{'info loss':>12}")
    for name, summary in report.strategies.items():
        loss = summary.information_loss
        print(f"{name:<16}{_fmt(summary.visualization_optimal)}"
              f"{_fmt(loss, digits=4)}")
    print(f"{'baseline':<16}{_fmt(report.baseline)}")
    print(f"{'benchmark':<16}{_fmt(report.benchmark)}")
    print(f"{'info value':<16}{_fmt(report.value_of_information)}")
    baseline_ratio = (report.baseline / report.benchmark
                      if report.benchmark != 0 else None)
    if baseline_ratio is not None:
        print(f"{'base/benchmark':<16}{_fmt(baseline_ratio)}")

    incentives = None
    if design.conversion is not None:
        table = incentive_table(design)
        print()
        print(f"{'strategy':<16}{'pay(base)':>12}{'pay(opt)':>12}"
              f"{'incentive':>12}{'ratio':>12}")
        for row in table.rows:
            print(f"{row.strategy:<16}{_fmt(row.payment_baseline, digits=3)}"
                  f"{_fmt(row.payment_optimal, digits=3)}"
                  f"{_fmt(row.incentive, digits=3)}"
                  f"{_fmt(row.incentive_ratio)}")
        incentives = {
            row.strategy: {
                "payment_baseline": row.payment_baseline,
                "payment_optimal": row.payment_optimal,
                "incentive": row.incentive,
                "incentive_ratio": row.incentive_ratio,
            }
            for row in table.rows
        }

    payload = {
        "command": "pre",
        "schema_version": 1,
        "design": design.name,
        "baseline": report.baseline,
        "benchmark": report.benchmark,
        "value_of_information": report.value_of_information,
        "baseline_ratio": baseline_ratio,
        "prior": list(report.prior.probabilities),
        "strategies": {
            name: {
                "visualization_optimal": s.visualization_optimal,
                "information_loss": s.information_loss,
                "posteriors": {
                    v: list(b.probabilities) for v, b in s.posteriors.items()
                },
            }
            for name, s in report.strategies.items()
        },
        "incentives": incentives,
        "pinned": _pinned_payload(case),
    }
    _write_json(payload, args.out)
    return EXIT_OK


def cmd_post(args) -> int:
    design, _ = _resolve_design(args)
    records = read_trials_csv(args.trials)
    by_strategy: dict[str, list] = {}
    for r in records:
        by_strategy.setdefault(r.strategy, []).append(r)

    report = rational_report(design)
    reports = []
    print(f"design: {design.name}")
    print(f"{'strategy':<16}{'n':>8}{'behavioral':>12}{'calibrated':>12}"
          f"{'info gain':>12}{'belief':>10}{'optim.':>10}")
    for name in sorted(by_strategy):
        lr = loss_report(design, name, by_strategy[name],
                         bin_width=args.bin_width,
                         smoothing_alpha=args.smoothing_alpha)
        reports.append(lr)
        print(f"{name:<16}{int(lr.n_trials):>8}{_fmt(lr.behavioral)}"
              f"{_fmt(lr.calibrated)}"
              f"{_fmt(lr.behavioral_value_of_information)}"
              f"{_fmt(lr.belief_loss, width=10)}"
              f"{_fmt(lr.optimization_loss, width=10)}")
        for warning in lr.warnings:
            print(f"  warning [{name}]: {warning}")
    pooled = pooled_loss_report(reports) if len(reports) > 1 else None
    if pooled:
        print(f"{'pooled':<16}{int(pooled.n_trials):>8}{_fmt(pooled.behavioral)}"
              f"{_fmt(pooled.calibrated)}"
              f"{_fmt(pooled.behavioral_value_of_information)}"
              f"{_fmt(pooled.belief_loss, width=10)}"
              f"{_fmt(pooled.optimization_loss, width=10)}")

    def loss_payload(lr):
        return {
            "n_trials": lr.n_trials,
            "behavioral": lr.behavioral,
            "calibrated": lr.calibrated,
            "behavioral_value_of_information":
                lr.behavioral_value_of_information,
            "belief_loss": lr.belief_loss,
            "optimization_loss": lr.optimization_loss,
            "warnings": list(lr.warnings),
        }

    payload = {
        "command": "post",
        "schema_version": 1,
        "design": design.name,
        "baseline": report.baseline,
        "benchmark": report.benchmark,
        "value_of_information": report.value_of_information,
        "strategies": {lr.strategy: loss_payload(lr) for lr in reports},
        "pooled": loss_payload(pooled) if pooled else None,
    }
    _write_json(payload, args.out)
    return EXIT_OK


def _parse_agent(text: str, task: str) -> AgentSpec:
    head, _, params_text = text.partition(":")
    params = {}
    if params_text:
        for chunk in params_text.split(","):
            key, _, value = chunk.partition("=")
            if not value:
                raise RabenchError(f"malformed agent parameter {chunk!r}")
            params[key.strip()] = value.strip()
    kind = head.strip().lower()
    if kind == "rational":
        return AgentSpec.rational(task)
    if kind == "prior":
        return AgentSpec.prior_only(task)
    if kind in ("random", "uniform-random"):
        return AgentSpec.uniform_random(task)
    if kind in ("noisy", "noisy-belief"):
        return AgentSpec.noisy_belief(float(params.get("k", "0.5")), task)
    if kind == "lapse":
        inner = _parse_agent(params.get("inner", "rational"), task)
        return AgentSpec.lapsing(float(params.get("rate", "0.1")), inner)
    raise RabenchError(
        f"unknown agent {head!r}; use rational, prior, random, "
        f"noisy[:k=SD], or lapse[:rate=R,inner=KIND]"
    )


def cmd_simulate(args) -> int:
    design, _ = _resolve_design(args)
    agent = _parse_agent(args.agent, args.task)
    strategy = args.strategy or design.strategy_names()[0]
    records = simulate(design, strategy, agent, args.n, seed=args.seed,
                       balanced=args.balanced)
    write_trials_csv(records, args.out)
    print(f"wrote {len(records)} trials for agent {args.agent!r} on "
          f"strategy {strategy!r} to {args.out}")
    return EXIT_OK


def cmd_export(args) -> int:
    design, _ = _resolve_design(args)
    save_design_config(design, args.out)
    print(f"wrote design config to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rabench",
        description="Rational-agent benchmarks and loss decomposition "
                    "for decision experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_pre = sub.add_parser("pre", help="pre-experimental rational analysis")
    _add_design_source(p_pre)
    p_pre.add_argument("--grid-step", type=float, default=0.25,
                       help="arrival grid resolution (transit designs)")
    p_pre.add_argument("--out", type=Path, default=None,
                       help="write a JSON summary here")
    p_pre.set_defaults(func=cmd_pre)

    p_post = sub.add_parser("post", help="behavioral loss decomposition")
    _add_design_source(p_post)
    p_post.add_argument("--trials", type=Path, required=True,
                        help="trial CSV (trial_id,strategy,signal,state,"
                             "response_kind,response)")
    p_post.add_argument("--bin-width", type=float, default=DEFAULT_BIN_WIDTH,
                        help="probability-report bin width")
    p_post.add_argument("--smoothing-alpha", type=float, default=0.0,
                        help="additive smoothing for empirical conditionals")
    p_post.add_argument("--out", type=Path, default=None,
                        help="write a JSON summary here")
    p_post.set_defaults(func=cmd_post)

    p_sim = sub.add_parser("simulate", help="generate synthetic trial CSVs")
    _add_design_source(p_sim)
    p_sim.add_argument("--agent", required=True,
                       help="rational | prior | random | noisy[:k=SD] | "
                            "lapse[:rate=R,inner=KIND]")
    p_sim.add_argument("--task", choices=("decision", "belief"),
                       default="decision")
    p_sim.add_argument("--strategy", default=None,
                       help="strategy to simulate (default: first)")
    p_sim.add_argument("--n", type=int, default=10_000, help="trial count")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--balanced", action="store_true",
                       help="cycle signals in balanced blocks instead of "
                            "i.i.d. draws")
    p_sim.add_argument("--out", type=Path, required=True,
                       help="output trial CSV path")
    p_sim.set_defaults(func=cmd_simulate)

    p_exp = sub.add_parser("export", help="write a builtin case as JSON config")
    _add_design_source(p_exp)
    p_exp.add_argument("--out", type=Path, required=True)
    p_exp.set_defaults(func=cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RabenchError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as err:  # internal invariant violation
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
