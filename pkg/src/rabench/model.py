"""Core domain types for decision experiments.

A decision problem couples a finite state space, a finite action space, a
scoring rule S(a, theta), and an information structure (a joint distribution
over signals and states). Everything downstream -- rational baselines and
benchmarks, behavioral calibration, payments -- is built from the three
elementary operations defined here:

* ``expected_score``: the score of an action in expectation over a belief,
* ``optimal_action``: the argmax action for a belief,
* ``proper_score``: score a reported belief by playing its optimal action
  against the realized state.

All types are immutable after construction and all operations are pure, so
values can be shared freely across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .errors import DimensionError, InvalidModelError

#: Probability vectors whose mass deviates from 1 by at most this much are
#: renormalized; anything worse is rejected.
NORMALIZATION_TOL = 1e-9

#: Tolerance used when experiment strategies must share a common state prior.
PRIOR_MATCH_TOL = 1e-6


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_unique(ids: Sequence[str], what: str) -> None:
    if len(ids) == 0:
        raise InvalidModelError(f"{what} must be non-empty")
    if len(set(ids)) != len(ids):
        raise InvalidModelError(f"{what} identifiers must be unique")


@dataclass(frozen=True)
class StateSpace:
    """Finite, ordered collection of payoff-relevant states.

    ``values`` optionally attaches a numeric interpretation to each state
    (e.g. arrival minutes); rules that integrate over state magnitudes
    require it.
    """

    ids: tuple[str, ...]
    labels: tuple[str, ...] = ()
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(str(s) for s in self.ids))
        _check_unique(self.ids, "state space")
        if self.labels:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != len(self.ids):
                raise InvalidModelError("state labels must match states 1:1")
        if self.values is not None:
            vals = tuple(float(v) for v in self.values)
            if len(vals) != len(self.ids):
                raise InvalidModelError("state values must match states 1:1")
            object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.ids)

    def index(self, state_id: str) -> int:
        try:
            return self.ids.index(str(state_id))
        except ValueError:
            raise InvalidModelError(f"unknown state {state_id!r}") from None

    def numeric_values(self) -> np.ndarray:
        if self.values is None:
            raise InvalidModelError(
                "state space has no numeric values; supply values= to use "
                "magnitude-based rules"
            )
        return np.asarray(self.values)


@dataclass(frozen=True)
class ActionSpace:
    """Finite action menu, possibly produced by expanding a grid or by
    binning probability reports.

    kind is one of ``finite`` (explicit ids), ``grid`` (numeric grid expanded
    to one action per step), or ``report`` (probability reports over a binary
    state space, discretized into bins of ``bin_width``; each action's value
    is its bin midpoint).
    """

    ids: tuple[str, ...]
    kind: str = "finite"
    values: tuple[float, ...] | None = None
    bin_width: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(str(a) for a in self.ids))
        _check_unique(self.ids, "action space")
        if self.kind not in ("finite", "grid", "report"):
            raise InvalidModelError(f"unknown action space kind {self.kind!r}")
        if self.values is not None:
            vals = tuple(float(v) for v in self.values)
            if len(vals) != len(self.ids):
                raise InvalidModelError("action values must match actions 1:1")
            object.__setattr__(self, "values", vals)

    @staticmethod
    def finite(ids: Sequence[str]) -> "ActionSpace":
        return ActionSpace(ids=tuple(ids), kind="finite")

    @staticmethod
    def integer_grid(low: int, high: int, step: int = 1) -> "ActionSpace":
        if step <= 0:
            raise InvalidModelError("grid step must be positive")
        if high < low:
            raise InvalidModelError("grid upper bound below lower bound")
        vals = list(range(int(low), int(high) + 1, int(step)))
        return ActionSpace(
            ids=tuple(str(v) for v in vals),
            kind="grid",
            values=tuple(float(v) for v in vals),
        )

    @staticmethod
    def probability_reports(states: StateSpace, bin_width: float = 0.02) -> "ActionSpace":
        if not (0.0 < bin_width <= 1.0):
            raise InvalidModelError("bin width must lie in (0, 1]")
        if len(states) != 2:
            raise InvalidModelError(
                "probability-report actions are only defined for 2-state spaces"
            )
        n_bins = int(np.ceil(1.0 / bin_width))
        mids = [min((i + 0.5) * bin_width, 1.0) for i in range(n_bins)]
        return ActionSpace(
            ids=tuple(f"{m:.6g}" for m in mids),
            kind="report",
            values=tuple(mids),
            bin_width=float(bin_width),
        )

    def __len__(self) -> int:
        return len(self.ids)

    def index(self, action_id: str) -> int:
        try:
            return self.ids.index(str(action_id))
        except ValueError:
            raise InvalidModelError(f"unknown action {action_id!r}") from None

    def numeric_values(self) -> np.ndarray:
        if self.values is None:
            raise InvalidModelError(
                "action space has no numeric values; magnitude-based rules "
                "need a grid or report space"
            )
        return np.asarray(self.values)


@dataclass(frozen=True, eq=False)
class Belief:
    """Probability vector over a state space.

    Inputs whose mass is within ``NORMALIZATION_TOL`` of 1 are renormalized;
    anything further off is rejected rather than silently fixed.
    """

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise InvalidModelError("belief must be a non-empty vector")
        if np.any(p < -NORMALIZATION_TOL) or not np.all(np.isfinite(p)):
            raise InvalidModelError("belief entries must be finite and non-negative")
        total = p.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise InvalidModelError(f"belief mass {total!r} is not 1 within tolerance")
        p = np.clip(p, 0.0, None) / p.clip(0.0, None).sum()
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @staticmethod
    def binary(p_positive: float) -> "Belief":
        """Belief over a 2-state space parameterized by the second state's mass."""
        return Belief(np.array([1.0 - p_positive, p_positive]))

    @staticmethod
    def point_mass(index: int, n_states: int) -> "Belief":
        p = np.zeros(n_states)
        p[index] = 1.0
        return Belief(p)

    def __len__(self) -> int:
        return len(self.probabilities)

    def mean_value(self, state_values: np.ndarray) -> float:
        return float(self.probabilities @ np.asarray(state_values))


@dataclass(frozen=True, eq=False)
class MatrixRule:
    """Scoring rule given as an explicit (action x state) score table."""

    scores: np.ndarray

    def __post_init__(self):
        s = np.array(self.scores, dtype=float)
        if s.ndim != 2 or s.size == 0:
            raise InvalidModelError("score matrix must be 2-d and non-empty")
        if not np.all(np.isfinite(s)):
            raise InvalidModelError("score matrix entries must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)

    @property
    def n_actions(self) -> int:
        return self.scores.shape[0]

    @property
    def n_states(self) -> int:
        return self.scores.shape[1]


@dataclass(frozen=True)
class TransitRule:
    """Catch-or-miss payoff for timing a bus departure.

    Actions and states are minutes. Arriving at minute ``a`` against a bus
    arriving at minute ``theta`` earns ``activity_rate`` per minute of
    activity before leaving, ``waiting_rate`` (non-positive) per minute spent
    waiting, and ``destination_rate`` per minute at the destination, capped at
    ``max_destination_minutes``. Missing the bus (a > theta) means riding a
    second bus that arrives ``second_bus_offset`` minutes after a fresh draw
    from the same arrival distribution; expectations plug in the belief's own
    mean arrival for that draw, which is exact because the payoff is linear
    in the second arrival time.

    ``exact_second_bus`` switches the expectation to an explicit sum over the
    arrival grid; it exists as a sensitivity check and agrees with the
    plug-in form to rounding.
    """

    activity_rate: float
    waiting_rate: float
    destination_rate: float
    max_destination_minutes: float
    second_bus_offset: float = 30.0
    exact_second_bus: bool = False

    def __post_init__(self):
        for name in ("activity_rate", "waiting_rate", "destination_rate",
                     "max_destination_minutes", "second_bus_offset"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidModelError(f"transit parameter {name} must be finite")
        if self.max_destination_minutes <= 0:
            raise InvalidModelError("max destination time must be positive")
        if self.waiting_rate > 0:
            raise InvalidModelError("waiting rate must be non-positive")

    def realized_score(self, action_value: float, state_value: float,
                       second_bus_mean: float) -> float:
        """Score of one (action, state) outcome given a plug-in second-bus mean."""
        r0, rw, rd = self.activity_rate, self.waiting_rate, self.destination_rate
        T = self.max_destination_minutes
        a, th = float(action_value), float(state_value)
        if a <= th:
            return r0 * a + rw * (th - a) + rd * T
        m = float(second_bus_mean)
        return r0 * a + rw * (m + self.second_bus_offset - a) + rd * (T - (m - th))

    def expected_scores_batch(self, beliefs: np.ndarray, action_values: np.ndarray,
                              state_values: np.ndarray) -> np.ndarray:
        """Expected scores for a batch of beliefs, shape (n, actions).

        Uses the same plug-in second-bus expectation as
        :meth:`expected_scores`; the quadratic-in-belief cross term couples
        the per-belief arrival mean with the miss probability.
        """
        P = np.asarray(beliefs, dtype=float)
        theta = np.asarray(state_values, dtype=float)
        a = np.asarray(action_values, dtype=float)
        r0, rw, rd = self.activity_rate, self.waiting_rate, self.destination_rate
        T, off = self.max_destination_minutes, self.second_bus_offset
        catch = theta[:, None] >= a[None, :]          # (states, actions)
        catch_part = np.where(
            catch, r0 * a[None, :] + rw * (theta[:, None] - a[None, :]) + rd * T, 0.0
        )
        k_a = r0 * a + rw * (off - a) + rd * T        # miss constant per action
        miss_part = np.where(~catch, k_a[None, :] + rd * theta[:, None], 0.0)
        base = P @ (catch_part + miss_part)           # (n, actions)
        means = P @ theta                              # (n,)
        miss_prob = P @ (~catch).astype(float)         # (n, actions)
        return base + (rw - rd) * means[:, None] * miss_prob

    def expected_scores(self, belief: Belief, action_values: np.ndarray,
                        state_values: np.ndarray) -> np.ndarray:
        """Expected score of every action under ``belief`` over the state grid."""
        p = belief.probabilities
        theta = np.asarray(state_values, dtype=float)
        if p.shape != theta.shape:
            raise DimensionError("belief dimension does not match the arrival grid")
        a = np.asarray(action_values, dtype=float)[:, None]
        r0, rw, rd = self.activity_rate, self.waiting_rate, self.destination_rate
        T, off = self.max_destination_minutes, self.second_bus_offset
        catch = a <= theta[None, :]
        catch_score = r0 * a + rw * (theta[None, :] - a) + rd * T
        if self.exact_second_bus:
            # literal expectation over the second arrival; the payoff is
            # linear in it, so this matches the plug-in branch to rounding
            second = theta[None, None, :]
            miss_grid = (r0 * a[:, :, None]
                         + rw * (second + off - a[:, :, None])
                         + rd * (T - (second - theta[None, :, None])))
            miss_score = np.tensordot(miss_grid, p, axes=([2], [0]))
        else:
            m = float(p @ theta)
            miss_score = r0 * a + rw * (m + off - a) + rd * (T - (m - theta[None, :]))
        table = np.where(catch, catch_score, miss_score)
        return table @ p


ScoringRule = Union[MatrixRule, TransitRule]


@dataclass(frozen=True, eq=False)
class InformationStructure:
    """Joint distribution over (signal, state) induced by one visualization
    or communication strategy."""

    signals: tuple[str, ...]
    joint: np.ndarray
    check: bool = True

    def __post_init__(self):
        object.__setattr__(self, "signals", tuple(str(v) for v in self.signals))
        j = np.array(self.joint, dtype=float)
        if self.check:
            problems = structure_violations(self.signals, j)
            if problems:
                raise InvalidModelError(problems)
            j = j / j.sum()
        j.setflags(write=False)
        object.__setattr__(self, "joint", j)

    @property
    def n_states(self) -> int:
        return self.joint.shape[1]

    def __len__(self) -> int:
        return len(self.signals)

    def signal_index(self, signal_id: str) -> int:
        try:
            return self.signals.index(str(signal_id))
        except ValueError:
            raise InvalidModelError(f"unknown signal {signal_id!r}") from None

    def signal_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    def state_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=0)


def structure_violations(signals: Sequence[str], joint: np.ndarray) -> list[str]:
    """All invariant violations of a would-be information structure."""
    out = []
    j = np.asarray(joint, dtype=float)
    if j.ndim != 2 or j.size == 0:
        return ["joint must be a non-empty (signal x state) matrix"]
    if len(signals) != j.shape[0]:
        out.append("signal list does not match joint rows")
    if len(set(signals)) != len(signals):
        out.append("signal identifiers must be unique")
    if not np.all(np.isfinite(j)):
        out.append("joint entries must be finite")
        return out
    if np.any(j < -NORMALIZATION_TOL):
        out.append("joint entries must be non-negative")
    total = j.sum()
    if abs(total - 1.0) > NORMALIZATION_TOL:
        out.append(f"joint mass is {total!r}, not 1 within tolerance")
    if np.any(j.sum(axis=1) <= 0.0):
        out.append("every signal row needs positive total mass")
    return out


@dataclass(frozen=True)
class DecisionProblem:
    """One strategy's complete decision task: spaces, rule, and joint.

    Construction is deliberately lax about cross-component consistency so
    that :func:`validate` can report every violation at once; operations
    raise structured errors when dimensions do not line up.
    """

    states: StateSpace
    actions: ActionSpace
    rule: ScoringRule
    structure: InformationStructure

    def belief_from_report(self, p_positive: float) -> Belief:
        if len(self.states) != 2:
            raise InvalidModelError(
                "scalar probability reports need a 2-state space or an "
                "explicit report mapping"
            )
        return Belief.binary(p_positive)


@dataclass(frozen=True)
class ExperimentDesign:
    """A base decision task plus the set of strategies being compared.

    All strategies must share the same data-generating process, i.e. their
    joints must marginalize to one common state prior.
    """

    states: StateSpace
    actions: ActionSpace
    rule: ScoringRule
    strategies: Mapping[str, InformationStructure]
    conversion: object | None = None
    trials_per_experiment: int = 1
    initial_score: float = 0.0
    report_map: "ReportMap | None" = None
    name: str = "design"

    def __post_init__(self):
        object.__setattr__(self, "strategies", dict(self.strategies))
        if not self.strategies:
            raise InvalidModelError("an experiment design needs at least one strategy")
        priors = {k: s.state_marginal() for k, s in self.strategies.items()}
        ref_name = next(iter(priors))
        ref = priors[ref_name]
        for k, p in priors.items():
            if p.shape != ref.shape:
                raise InvalidModelError("strategies disagree on the state space size")
            if np.max(np.abs(p - ref)) > PRIOR_MATCH_TOL:
                raise InvalidModelError(
                    f"strategy {k!r} marginalizes to a different state prior "
                    f"than {ref_name!r}"
                )

    def strategy_names(self) -> list[str]:
        return list(self.strategies)

    def problem(self, strategy: str) -> DecisionProblem:
        if strategy not in self.strategies:
            raise InvalidModelError(f"unknown strategy {strategy!r}")
        return DecisionProblem(self.states, self.actions, self.rule,
                               self.strategies[strategy])

    def any_problem(self) -> DecisionProblem:
        return self.problem(next(iter(self.strategies)))


@dataclass(frozen=True)
class ReportMap:
    """Named, invertible mapping between scalar reports and beliefs.

    Belief-report tasks sometimes elicit a quantity that is not literally a
    state probability (e.g. a probability-of-superiority judgment); the map
    carries report -> belief and belief -> report conversions plus a stable
    name for config round-trips.
    """

    name: str
    to_belief: Callable[[float], Belief] = field(compare=False)
    from_belief: Callable[[Belief], float] = field(compare=False)


def binary_report_map(n_states: int = 2) -> ReportMap:
    if n_states != 2:
        raise InvalidModelError("the default report map needs a binary state space")
    return ReportMap(
        name="binary",
        to_belief=lambda r: Belief.binary(float(r)),
        from_belief=lambda b: float(b.probabilities[1]),
    )


# ---------------------------------------------------------------------------
# Elementary operations


def _matrix_expected(rule: MatrixRule, belief: Belief) -> np.ndarray:
    if rule.n_states != len(belief):
        raise DimensionError(
            f"belief has {len(belief)} states but the rule scores {rule.n_states}"
        )
    return rule.scores @ belief.probabilities


def expected_scores_all(problem: DecisionProblem, belief: Belief) -> np.ndarray:
    """Expected score of every action under ``belief``."""
    rule = problem.rule
    if isinstance(rule, MatrixRule):
        if rule.n_actions != len(problem.actions):
            raise DimensionError(
                f"rule scores {rule.n_actions} actions but the space has "
                f"{len(problem.actions)}"
            )
        return _matrix_expected(rule, belief)
    return rule.expected_scores(
        belief, problem.actions.numeric_values(), problem.states.numeric_values()
    )


def expected_score(problem: DecisionProblem, action_id: str, belief: Belief) -> float:
    """Expected score of a single action: sum_theta p(theta) * S(a, theta)."""
    idx = problem.actions.index(action_id)
    return float(expected_scores_all(problem, belief)[idx])


def optimal_action(problem: DecisionProblem, belief: Belief) -> tuple[str, float]:
    """Best action under ``belief`` and its expected score.

    Ties break toward the lowest action index, so the result is
    deterministic.
    """
    if len(problem.actions) == 0:
        raise InvalidModelError("empty action space")
    ev = expected_scores_all(problem, belief)
    idx = int(np.argmax(ev))  # argmax returns the first (lowest) maximizing index
    return problem.actions.ids[idx], float(ev[idx])


def optimal_action_indices(problem: DecisionProblem, beliefs: np.ndarray) -> np.ndarray:
    """Vectorized argmax action indices for a batch of belief rows."""
    rule = problem.rule
    P = np.asarray(beliefs, dtype=float)
    if isinstance(rule, MatrixRule):
        ev = P @ rule.scores.T
    else:
        ev = rule.expected_scores_batch(
            P, problem.actions.numeric_values(), problem.states.numeric_values()
        )
    return np.argmax(ev, axis=1)


def realized_score(problem: DecisionProblem, action_id: str, state_id: str,
                   context_belief: Belief | None = None) -> float:
    """Score of one realized (action, state) pair.

    A matrix rule reads the table entry. The transit rule additionally needs
    a second-bus arrival expectation, taken from ``context_belief`` (the
    belief in scope when the action was chosen).
    """
    a = problem.actions.index(action_id)
    t = problem.states.index(state_id)
    rule = problem.rule
    if isinstance(rule, MatrixRule):
        if rule.n_actions != len(problem.actions) or rule.n_states != len(problem.states):
            raise DimensionError("score matrix does not match the action/state spaces")
        return float(rule.scores[a, t])
    if context_belief is None:
        raise InvalidModelError("transit scores need a context belief for the second bus")
    m = context_belief.mean_value(problem.states.numeric_values())
    return rule.realized_score(
        problem.actions.numeric_values()[a], problem.states.numeric_values()[t], m
    )


def proper_score(problem: DecisionProblem, reported_belief: Belief,
                 state_id: str) -> float:
    """Score a reported belief by playing its optimal action against the
    realized state (the proper form of an arbitrary scoring rule)."""
    best, _ = optimal_action(problem, reported_belief)
    return realized_score(problem, best, state_id, context_belief=reported_belief)


def tabulate_rule(problem: DecisionProblem, context_belief: Belief) -> MatrixRule:
    """Wrap any rule as an explicit matrix over the problem's finite spaces.

    For the transit rule the second-bus expectation is pinned to
    ``context_belief``, after which the tabulated matrix and the formula
    agree exactly for that belief.
    """
    rule = problem.rule
    if isinstance(rule, MatrixRule):
        return rule
    m = context_belief.mean_value(problem.states.numeric_values())
    a_vals = problem.actions.numeric_values()
    s_vals = problem.states.numeric_values()
    table = np.array(
        [[rule.realized_score(a, t, m) for t in s_vals] for a in a_vals]
    )
    return MatrixRule(table)


def validate(problem: DecisionProblem) -> list[str]:
    """Check every invariant of a decision problem; return all violations.

    An empty list means the problem is well formed.
    """
    out: list[str] = []
    structure = problem.structure
    out.extend(structure_violations(structure.signals, structure.joint))
    if structure.joint.ndim == 2 and structure.n_states != len(problem.states):
        out.append(
            f"dimension: joint has {structure.n_states} states but the space "
            f"has {len(problem.states)}"
        )
    rule = problem.rule
    if isinstance(rule, MatrixRule):
        if rule.n_actions != len(problem.actions):
            out.append(
                f"dimension: score matrix has {rule.n_actions} actions but the "
                f"space has {len(problem.actions)}"
            )
        if rule.n_states != len(problem.states):
            out.append(
                f"dimension: score matrix has {rule.n_states} states but the "
                f"space has {len(problem.states)}"
            )
    else:
        if problem.actions.values is None:
            out.append("transit rule needs numeric action values")
        if problem.states.values is None:
            out.append("transit rule needs numeric state values")
    return out
