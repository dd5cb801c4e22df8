"""Behavioral trial ingestion, scoring, calibration, and loss decomposition.

Observed trials induce an empirical joint distribution over (action, state).
The behavioral score evaluates that joint as-is; the calibrated score
replaces each observed action with the best response to its empirical
state-conditional, which bounds what the agent's information was worth. The
gap to the rational benchmark then splits into a belief loss (stimuli not
differentiated) and an optimization loss (information not acted on), both in
units of the design's value of information.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidModelError, TrialDataError
from .model import (
    Belief,
    ExperimentDesign,
    ReportMap,
    binary_report_map,
    expected_scores_all,
    optimal_action,
    realized_score,
)
from .rational import rational_report

#: Default width of the probability-report bins.
DEFAULT_BIN_WIDTH = 0.02

TRIAL_CSV_HEADER = ("trial_id", "strategy", "signal", "state",
                    "response_kind", "response")


@dataclass(frozen=True)
class TrialRecord:
    """One observed trial: what was shown, what happened, what the agent did.

    ``response`` is an action id for decision tasks and a probability report
    in [0, 1] for belief tasks, per ``response_kind``.
    """

    trial_id: str
    strategy: str
    signal: str
    state: str
    response_kind: str  # "action" | "probability"
    response: str | float

    def __post_init__(self):
        if self.response_kind not in ("action", "probability"):
            raise InvalidModelError(
                f"response_kind must be 'action' or 'probability', "
                f"got {self.response_kind!r}"
            )


def write_trials_csv(records: Iterable[TrialRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_CSV_HEADER)
        for r in records:
            response = r.response if r.response_kind == "action" else repr(float(r.response))
            writer.writerow(
                [r.trial_id, r.strategy, r.signal, r.state, r.response_kind, response]
            )


def read_trials_csv(path: str | Path) -> list[TrialRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TrialDataError("trial file is empty") from None
        if tuple(h.strip() for h in header) != TRIAL_CSV_HEADER:
            raise TrialDataError(
                f"trial file header must be {','.join(TRIAL_CSV_HEADER)}"
            )
        out = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRIAL_CSV_HEADER):
                raise TrialDataError(f"line {i}: expected {len(TRIAL_CSV_HEADER)} fields")
            trial_id, strategy, signal, state, kind, response = row
            if kind == "probability":
                try:
                    response = float(response)
                except ValueError:
                    raise TrialDataError(
                        f"line {i}: probability response {response!r} is not a number"
                    ) from None
            out.append(TrialRecord(trial_id, strategy, signal, state, kind, response))
    if not out:
        raise TrialDataError("trial file contains no records")
    return out


@dataclass(frozen=True, eq=False)
class EmpiricalJoint:
    """Counts and normalized masses over (observed action, realized state).

    ``kind`` records the provenance: raw action counts, or probability
    reports binned at ``bin_width`` with one row per bin (midpoints in
    ``action_values``).
    """

    action_ids: tuple[str, ...]
    state_ids: tuple[str, ...]
    counts: np.ndarray
    kind: str  # "action" | "report"
    action_values: tuple[float, ...] | None = None
    state_values: tuple[float, ...] | None = None
    bin_width: float | None = None

    def __post_init__(self):
        c = np.array(self.counts, dtype=float)
        if c.shape != (len(self.action_ids), len(self.state_ids)):
            raise InvalidModelError("count matrix does not match action/state ids")
        if np.any(c < 0):
            raise InvalidModelError("counts must be non-negative")
        if c.sum() <= 0:
            raise InvalidModelError("empirical joint needs at least one observation")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> float:
        return float(self.counts.sum())

    @property
    def masses(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    def action_marginal(self) -> np.ndarray:
        return self.masses.sum(axis=1)

    def state_marginal(self) -> np.ndarray:
        return self.masses.sum(axis=0)

    def conditional(self, action_index: int, smoothing_alpha: float = 0.0) -> Belief:
        row = self.counts[action_index]
        if smoothing_alpha > 0.0:
            row = row + smoothing_alpha
        total = row.sum()
        if total <= 0:
            raise InvalidModelError(
                f"action {self.action_ids[action_index]!r} was never observed"
            )
        return Belief(row / total)


def _report_bins(bin_width: float) -> tuple[np.ndarray, tuple[str, ...]]:
    n_bins = int(np.ceil(1.0 / bin_width))
    mids = np.minimum((np.arange(n_bins) + 0.5) * bin_width, 1.0)
    ids = tuple(f"{m:.6g}" for m in mids)
    return mids, ids


def ingest(records: Sequence[TrialRecord], design: ExperimentDesign,
           bin_width: float = DEFAULT_BIN_WIDTH) -> EmpiricalJoint:
    """Fold trial records into an empirical (action, state) joint.

    Decision tasks count (action, state) pairs directly; belief tasks bin
    the probability reports at ``bin_width`` and treat each bin as an
    action. Records must be of one task type, and every referenced strategy,
    signal, state, and action must exist in the design; offenders are
    reported by trial id.
    """
    if not records:
        raise TrialDataError("no trial records to ingest")
    kinds = {r.response_kind for r in records}
    if len(kinds) > 1:
        raise TrialDataError("records mix decision and belief responses")
    kind = kinds.pop()

    states = design.states
    state_index = {s: i for i, s in enumerate(states.ids)}
    bad: list[str] = []
    problems: list[str] = []

    def complain(record: TrialRecord, what: str) -> None:
        bad.append(record.trial_id)
        problems.append(what)

    if kind == "action":
        action_index = {a: i for i, a in enumerate(design.actions.ids)}
        counts = np.zeros((len(design.actions), len(states)))
    else:
        if not (0.0 < bin_width <= 1.0):
            raise InvalidModelError("bin width must lie in (0, 1]")
        mids, bin_ids = _report_bins(bin_width)
        counts = np.zeros((len(mids), len(states)))

    for r in records:
        if r.strategy not in design.strategies:
            complain(r, f"unknown strategy {r.strategy!r}")
            continue
        structure = design.strategies[r.strategy]
        if r.signal not in structure.signals:
            complain(r, f"unknown signal {r.signal!r}")
            continue
        if r.state not in state_index:
            complain(r, f"unknown state {r.state!r}")
            continue
        t = state_index[r.state]
        if kind == "action":
            if str(r.response) not in action_index:
                complain(r, f"unknown action {r.response!r}")
                continue
            counts[action_index[str(r.response)], t] += 1.0
        else:
            p = float(r.response)
            if not (0.0 <= p <= 1.0):
                complain(r, f"probability report {p!r} outside [0, 1]")
                continue
            b = min(int(p / bin_width), counts.shape[0] - 1)
            counts[b, t] += 1.0

    if bad:
        raise TrialDataError(
            f"{len(bad)} record(s) reference unknown design elements: "
            + "; ".join(sorted(set(problems))),
            trial_ids=bad,
        )

    if kind == "action":
        return EmpiricalJoint(
            action_ids=design.actions.ids,
            state_ids=states.ids,
            counts=counts,
            kind="action",
            action_values=design.actions.values,
            state_values=states.values,
        )
    return EmpiricalJoint(
        action_ids=bin_ids,
        state_ids=states.ids,
        counts=counts,
        kind="report",
        action_values=tuple(float(m) for m in mids),
        state_values=states.values,
        bin_width=float(bin_width),
    )


def _resolve_report_map(design: ExperimentDesign) -> ReportMap:
    if design.report_map is not None:
        return design.report_map
    return binary_report_map(len(design.states))


def behavioral_score(joint: EmpiricalJoint, design: ExperimentDesign) -> float:
    """Expected score of the observed behavior under the empirical joint.

    Action joints average each observed action's score against that action's
    empirical state-conditional (identical to averaging the score table over
    the joint, and well defined for the transit rule). Report joints score
    each bin by playing the optimal action of the bin-midpoint belief.
    """
    base = design.any_problem()
    if joint.kind == "action":
        action_marginal = joint.action_marginal()
        total = 0.0
        for i, a in enumerate(joint.action_ids):
            if action_marginal[i] <= 0:
                continue
            cond = joint.conditional(i)
            ev = expected_scores_all(base, cond)
            total += action_marginal[i] * float(ev[base.actions.index(a)])
        return total

    to_belief = _resolve_report_map(design).to_belief
    masses = joint.masses
    total = 0.0
    for i, mid in enumerate(joint.action_values):
        row_mass = masses[i].sum()
        if row_mass <= 0:
            continue
        belief = to_belief(float(mid))
        best, _ = optimal_action(base, belief)
        for t, state in enumerate(joint.state_ids):
            if masses[i, t] <= 0:
                continue
            total += masses[i, t] * realized_score(base, best, state,
                                                   context_belief=belief)
    return total


@dataclass(frozen=True)
class CalibrationResult:
    calibrated_score: float
    policy: dict[str, str]  # observed action/bin -> best response


def calibrate(joint: EmpiricalJoint, design: ExperimentDesign,
              smoothing_alpha: float = 0.0) -> CalibrationResult:
    """Replace each observed action with the optimal action against its
    empirical state-conditional; the resulting score is what a rational
    agent would earn from the information in the behavior.

    Rows that were never observed carry no weight and are skipped. Optional
    additive smoothing stabilizes conditionals from tiny samples.
    """
    action_marginal = joint.action_marginal()
    total = 0.0
    policy: dict[str, str] = {}
    for i, a in enumerate(joint.action_ids):
        if action_marginal[i] <= 0:
            continue
        cond = joint.conditional(i, smoothing_alpha=smoothing_alpha)
        ev = expected_scores_all(design.any_problem(), cond)
        best_idx = int(np.argmax(ev))
        policy[a] = design.actions.ids[best_idx]
        total += action_marginal[i] * float(ev[best_idx])
    return CalibrationResult(calibrated_score=total, policy=policy)


def behavioral_value_of_information(behavioral: float, baseline: float) -> float:
    """Score gained over the no-signal baseline, clamped at zero."""
    return max(behavioral - baseline, 0.0)


def belief_loss(visualization_optimal: float, calibrated: float,
                delta: float) -> float:
    """Fraction of the information value lost to not differentiating stimuli."""
    if delta <= 0.0:
        raise InvalidModelError("loss ratios need a positive value of information")
    return (visualization_optimal - calibrated) / delta


def optimization_loss(calibrated: float, behavioral: float, delta: float) -> float:
    """Fraction of the information value lost to acting suboptimally on the
    information the behavior contains."""
    if delta <= 0.0:
        raise InvalidModelError("loss ratios need a positive value of information")
    return (calibrated - behavioral) / delta


def decisions_from_beliefs(records: Sequence[TrialRecord],
                           design: ExperimentDesign,
                           report_map: ReportMap | None = None) -> list[TrialRecord]:
    """Convert belief reports to decision records by playing the optimal
    action under each report's mapped belief."""
    mapping = report_map or _resolve_report_map(design)
    base = design.any_problem()
    out = []
    for r in records:
        if r.response_kind != "probability":
            raise TrialDataError(
                "decisions_from_beliefs needs probability records",
                trial_ids=[r.trial_id],
            )
        belief = mapping.to_belief(float(r.response))
        best, _ = optimal_action(base, belief)
        out.append(TrialRecord(r.trial_id, r.strategy, r.signal, r.state,
                               "action", best))
    return out


@dataclass(frozen=True)
class LossReport:
    """Behavioral performance of one strategy, decomposed.

    All loss ratios are raw (not clamped); out-of-range values are flagged
    in ``warnings`` rather than hidden.
    """

    strategy: str
    n_trials: float
    behavioral: float
    calibrated: float
    behavioral_value_of_information: float
    belief_loss: float
    optimization_loss: float
    warnings: tuple[str, ...] = ()


def loss_report(design: ExperimentDesign, strategy: str,
                records: Sequence[TrialRecord],
                bin_width: float = DEFAULT_BIN_WIDTH,
                smoothing_alpha: float = 0.0) -> LossReport:
    """Full post-experimental decomposition for one strategy's records."""
    report = rational_report(design)
    delta = report.value_of_information
    if delta <= 0.0:
        raise InvalidModelError("loss ratios need a positive value of information")
    joint = ingest(records, design, bin_width=bin_width)
    b = behavioral_score(joint, design)
    c = calibrate(joint, design, smoothing_alpha=smoothing_alpha).calibrated_score
    rv = report.strategies[strategy].visualization_optimal

    warnings = []
    if b < report.baseline:
        warnings.append(
            "behavioral score is below the no-signal baseline; the data are "
            "consistent with the signal having been ignored"
        )
    bl = belief_loss(rv, c, delta)
    ol = optimization_loss(c, b, delta)
    for name, value in (("belief loss", bl), ("optimization loss", ol)):
        if value < -1e-9 or value > 1.0 + 1e-9:
            warnings.append(f"{name} {value:.4f} falls outside [0, 1]")
    return LossReport(
        strategy=strategy,
        n_trials=joint.n,
        behavioral=b,
        calibrated=c,
        behavioral_value_of_information=behavioral_value_of_information(
            b, report.baseline
        ),
        belief_loss=bl,
        optimization_loss=ol,
        warnings=tuple(warnings),
    )


def pooled_loss_report(reports: Sequence[LossReport]) -> LossReport:
    """Pool per-strategy reports, weighting by trial counts."""
    if not reports:
        raise InvalidModelError("nothing to pool")
    weights = np.array([r.n_trials for r in reports], dtype=float)
    weights /= weights.sum()

    def avg(attr: str) -> float:
        return float(sum(w * getattr(r, attr) for w, r in zip(weights, reports)))

    warnings = tuple(w for r in reports for w in r.warnings)
    return LossReport(
        strategy="pooled",
        n_trials=float(sum(r.n_trials for r in reports)),
        behavioral=avg("behavioral"),
        calibrated=avg("calibrated"),
        behavioral_value_of_information=avg("behavioral_value_of_information"),
        belief_loss=avg("belief_loss"),
        optimization_loss=avg("optimization_loss"),
        warnings=warnings,
    )
