import numpy as np
import pytest

from rabench.model import (
    ActionSpace,
    Belief,
    DecisionProblem,
    ExperimentDesign,
    InformationStructure,
    MatrixRule,
    StateSpace,
    TransitRule,
)

# The running example: decide whether to salt a parking lot against a
# possibly-freezing night. Scores: no-salt costs -100 if it freezes,
# salting costs -10 if it does not.
SALTING_SCORES = [[0.0, -100.0], [-10.0, 0.0]]

# Four-signal joint over (forecast spread, freezing state); columns each
# carry signal mass 0.25 and the freezing marginal is 0.0796.
WEATHER_JOINT = [
    [0.24845, 0.00155],
    [0.23805, 0.01195],
    [0.22360, 0.02640],
    [0.21030, 0.03970],
]


@pytest.fixture
def weather_states() -> StateSpace:
    return StateSpace(ids=("not-freezing", "freezing"))


@pytest.fixture
def weather_problem(weather_states) -> DecisionProblem:
    structure = InformationStructure(
        signals=("sigma=2", "sigma=3", "sigma=4", "sigma=5"),
        joint=np.array(WEATHER_JOINT),
    )
    return DecisionProblem(
        states=weather_states,
        actions=ActionSpace.finite(("no-salt", "salt")),
        rule=MatrixRule(np.array(SALTING_SCORES)),
        structure=structure,
    )


@pytest.fixture
def transit_scenario2_problem() -> DecisionProblem:
    """Second transit scenario: 14/min activity, -14/min waiting, 14/min at
    destination for up to 60 minutes, on an integer arrival grid."""
    minutes = list(range(0, 31))
    states = StateSpace(
        ids=tuple(str(m) for m in minutes),
        values=tuple(float(m) for m in minutes),
    )
    # placeholder uniform joint; rule-level tests supply their own beliefs
    joint = np.full((1, len(minutes)), 1.0 / len(minutes))
    return DecisionProblem(
        states=states,
        actions=ActionSpace.integer_grid(0, 30),
        rule=TransitRule(
            activity_rate=14.0,
            waiting_rate=-14.0,
            destination_rate=14.0,
            max_destination_minutes=60.0,
        ),
        structure=InformationStructure(signals=("only",), joint=joint),
    )


def weather_design() -> ExperimentDesign:
    """The full four-strategy forecast comparison used across the tests."""
    states = StateSpace(ids=("not-freezing", "freezing"))
    joint = np.array(WEATHER_JOINT)
    uncertainty = InformationStructure(
        signals=("sigma=2", "sigma=3", "sigma=4", "sigma=5"), joint=joint
    )
    mean_only = InformationStructure(
        signals=("mu=5",), joint=joint.sum(axis=0, keepdims=True)
    )
    return ExperimentDesign(
        states=states,
        actions=ActionSpace.finite(("no-salt", "salt")),
        rule=MatrixRule(np.array(SALTING_SCORES)),
        strategies={
            "mean": mean_only,
            "CI": uncertainty,
            "gradient": uncertainty,
            "HOPs": uncertainty,
        },
        name="weather",
    )


def random_matrix_problem(rng: np.random.Generator, n_states=None, n_actions=None,
                          n_signals=None) -> DecisionProblem:
    """Small random decision problem for property checks."""
    n_states = n_states or int(rng.integers(2, 6))
    n_actions = n_actions or int(rng.integers(2, 6))
    n_signals = n_signals or int(rng.integers(1, 7))
    joint = rng.random((n_signals, n_states)) + 1e-3
    joint /= joint.sum()
    scores = rng.uniform(-10.0, 10.0, size=(n_actions, n_states))
    return DecisionProblem(
        states=StateSpace(ids=tuple(f"s{i}" for i in range(n_states))),
        actions=ActionSpace.finite(tuple(f"a{i}" for i in range(n_actions))),
        rule=MatrixRule(scores),
        structure=InformationStructure(
            signals=tuple(f"v{i}" for i in range(n_signals)), joint=joint
        ),
    )


def random_belief(rng: np.random.Generator, n: int) -> Belief:
    p = rng.random(n) + 1e-9
    return Belief(p / p.sum())
