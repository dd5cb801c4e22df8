"""Score-to-currency conversion and incentive tables.

Scores are dimensionless points everywhere else in the package; this module
owns the translation to real payments. Experiment-level accounting
(per-trial scores accumulated over a session, plus any starting balance)
happens before conversion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidModelError
from .generative import constant_policy, rational_policy
from .model import ExperimentDesign
from .rational import rational_report


@dataclass(frozen=True)
class AffineConversion:
    """payment = base + rate * score"""

    base: float
    rate: float

    def __post_init__(self):
        _check_rate(self.rate)

    def convert(self, score: float) -> float:
        return self.base + self.rate * score


@dataclass(frozen=True)
class FlooredAffineConversion:
    """payment = base + rate * max(0, score - floor)

    Used when only the score above a threshold is rewarded (e.g. simulated
    account balances that must clear a minimum before paying out).
    """

    base: float
    rate: float
    floor: float

    def __post_init__(self):
        _check_rate(self.rate)

    def convert(self, score: float) -> float:
        return self.base + self.rate * max(0.0, score - self.floor)


@dataclass(frozen=True)
class ShiftedAffineConversion:
    """payment = base + rate * (score - shift)

    Subtracting a guaranteed-attainable score ``shift`` before conversion
    raises the incentive-to-guarantee ratio without changing the incentive
    itself.
    """

    base: float
    rate: float
    shift: float

    def __post_init__(self):
        _check_rate(self.rate)

    def convert(self, score: float) -> float:
        return self.base + self.rate * (score - self.shift)


ConversionRule = AffineConversion | FlooredAffineConversion | ShiftedAffineConversion


def _check_rate(rate: float) -> None:
    if not np.isfinite(rate):
        raise InvalidModelError("conversion rate must be finite")
    if rate < 0:
        raise InvalidModelError(
            "conversion must be nondecreasing in score (rate >= 0)"
        )


def convert(rule: ConversionRule, score: float) -> float:
    return rule.convert(float(score))


def experiment_score(design: ExperimentDesign, per_trial_score: float) -> float:
    """Cumulative score a session earns at a given per-trial expectation."""
    return design.initial_score + design.trials_per_experiment * per_trial_score


@dataclass(frozen=True)
class IncentiveRow:
    strategy: str
    payment_baseline: float
    payment_optimal: float
    incentive: float
    incentive_ratio: float


@dataclass(frozen=True)
class IncentiveTable:
    rows: tuple[IncentiveRow, ...]

    def row(self, strategy: str) -> IncentiveRow:
        for r in self.rows:
            if r.strategy == strategy:
                return r
        raise InvalidModelError(f"no incentive row for strategy {strategy!r}")

    @property
    def benchmark(self) -> IncentiveRow:
        return self.row("benchmark")


def incentive_table(design: ExperimentDesign,
                    rule: ConversionRule | None = None,
                    method: str = "linearized",
                    n: int = 100_000,
                    seed: int = 0) -> IncentiveTable:
    """Expected payments to a rational agent with and without the signal.

    One row per strategy plus a ``benchmark`` row for the best strategy. The
    default evaluates the conversion at the expected cumulative score; for
    floored conversions that is a linearization, and ``method="monte-carlo"``
    instead simulates per-trial scores, accumulates each session, converts,
    and averages.
    """
    rule = rule if rule is not None else design.conversion
    if rule is None:
        raise InvalidModelError("the design carries no conversion rule")
    if method not in ("linearized", "monte-carlo"):
        raise InvalidModelError(f"unknown incentive method {method!r}")

    report = rational_report(design)

    def payment(per_trial: float, policy_kind: str, strategy: str | None) -> float:
        if method == "linearized":
            return convert(rule, experiment_score(design, per_trial))
        return _simulated_payment(design, rule, policy_kind, strategy, n, seed)

    rows = []
    base_payment = payment(report.baseline, "baseline", None)
    if base_payment == 0.0:
        raise InvalidModelError(
            "baseline payment is zero; the incentive ratio is undefined"
        )
    for name, summary in report.strategies.items():
        opt_payment = payment(summary.visualization_optimal, "rational", name)
        rows.append(IncentiveRow(
            strategy=name,
            payment_baseline=base_payment,
            payment_optimal=opt_payment,
            incentive=opt_payment - base_payment,
            incentive_ratio=(opt_payment - base_payment) / base_payment,
        ))
    best = max(report.strategies, key=lambda s: report.strategies[s].visualization_optimal)
    best_payment = payment(report.strategies[best].visualization_optimal,
                           "rational", best)
    rows.append(IncentiveRow(
        strategy="benchmark",
        payment_baseline=base_payment,
        payment_optimal=best_payment,
        incentive=best_payment - base_payment,
        incentive_ratio=(best_payment - base_payment) / base_payment,
    ))
    return IncentiveTable(rows=tuple(rows))


def _simulated_payment(design: ExperimentDesign, rule: ConversionRule,
                       policy_kind: str, strategy: str | None,
                       n: int, seed: int) -> float:
    """Average converted payment over simulated sessions.

    Sessions draw ``trials_per_experiment`` i.i.d. trial scores under the
    relevant policy, so floors and other nonlinearities are honored exactly
    up to Monte Carlo error.
    """
    strategy = strategy or next(iter(design.strategies))
    problem = design.problem(strategy)
    if policy_kind == "baseline":
        from .model import optimal_action
        from .rational import prior

        action, _ = optimal_action(problem, prior(problem.structure))
        policy = constant_policy(action)
    else:
        policy = rational_policy(problem)

    trials = design.trials_per_experiment
    sessions = max(n // trials, 1)
    # one long score stream reshaped into sessions keeps the estimate
    # seeded and deterministic without per-session generator churn
    scores = _per_trial_scores(problem, policy, sessions * trials, seed)
    per_session = scores.reshape(sessions, trials).sum(axis=1)
    payments = [rule.convert(design.initial_score + s) for s in per_session]
    return float(np.mean(payments))


def _per_trial_scores(problem, policy, n, seed) -> np.ndarray:
    """Sample realized per-trial scores under a signal policy."""
    from .model import MatrixRule, tabulate_rule
    from .rational import posterior

    structure = problem.structure
    n_signals, n_states = structure.joint.shape
    flat = structure.joint.reshape(-1)
    cum = np.cumsum(flat)
    cum[-1] = 1.0
    action_index = {a: i for i, a in enumerate(problem.actions.ids)}

    if isinstance(problem.rule, MatrixRule):
        tables = [problem.rule.scores] * n_signals
    else:
        tables = [tabulate_rule(problem, posterior(structure, v)).scores
                  for v in structure.signals]
    score_table = np.empty((n_signals, n_states))
    for vi, v in enumerate(structure.signals):
        score_table[vi] = tables[vi][action_index[str(policy(v))]]

    rng = np.random.default_rng(seed)
    u = rng.uniform(size=n)
    cells = np.searchsorted(cum, u, side="right")
    v_idx, t_idx = np.unravel_index(cells, (n_signals, n_states))
    return score_table[v_idx, t_idx]
