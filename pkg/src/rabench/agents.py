"""Synthetic behavioral agents with known ground-truth loss structure.

These agents are test fixtures for the decomposition pipeline, not cognitive
models: the rational agent recovers zero losses, the prior agent pure belief
loss, and the noisy-belief agent a belief loss that grows with its noise.

Simulation is deterministic per seed. Stimuli are drawn first and response
noise afterwards, so agents that ignore their noise draws (zero noise, zero
lapse) reproduce the corresponding noiseless agent's records exactly under
the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .behavioral import TrialRecord
from .errors import InvalidModelError
from .model import (
    Belief,
    ExperimentDesign,
    binary_report_map,
    optimal_action,
    optimal_action_indices,
)
from .rational import posterior, prior


@dataclass(frozen=True)
class AgentSpec:
    """What kind of synthetic agent to run and on which task.

    kind: rational | prior | uniform-random | noisy-belief | lapse.
    ``noise_sd`` is the log-odds noise of the noisy-belief agent;
    ``lapse_rate`` mixes ``inner`` with a uniform-random response.
    """

    kind: str
    task: str = "decision"  # "decision" | "belief"
    noise_sd: float = 0.0
    lapse_rate: float = 0.0
    inner: "AgentSpec | None" = None

    def __post_init__(self):
        if self.kind not in ("rational", "prior", "uniform-random",
                             "noisy-belief", "lapse"):
            raise InvalidModelError(f"unknown agent kind {self.kind!r}")
        if self.task not in ("decision", "belief"):
            raise InvalidModelError(f"unknown task {self.task!r}")
        if self.noise_sd < 0:
            raise InvalidModelError("noise sd must be non-negative")
        if not (0.0 <= self.lapse_rate <= 1.0):
            raise InvalidModelError("lapse rate must lie in [0, 1]")
        if self.kind == "lapse":
            if self.inner is None:
                raise InvalidModelError("lapse agents need an inner agent")
            if self.inner.task != self.task:
                raise InvalidModelError("inner agent must share the lapse task")

    @staticmethod
    def rational(task: str = "decision") -> "AgentSpec":
        return AgentSpec(kind="rational", task=task)

    @staticmethod
    def prior_only(task: str = "decision") -> "AgentSpec":
        return AgentSpec(kind="prior", task=task)

    @staticmethod
    def uniform_random(task: str = "decision") -> "AgentSpec":
        return AgentSpec(kind="uniform-random", task=task)

    @staticmethod
    def noisy_belief(noise_sd: float, task: str = "decision") -> "AgentSpec":
        return AgentSpec(kind="noisy-belief", task=task, noise_sd=noise_sd)

    @staticmethod
    def lapsing(lapse_rate: float, inner: "AgentSpec") -> "AgentSpec":
        return AgentSpec(kind="lapse", task=inner.task, lapse_rate=lapse_rate,
                         inner=inner)


def _logit(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return np.log(p / (1.0 - p))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def _draw_stimuli(structure, n_trials: int, rng: np.random.Generator,
                  balanced: bool) -> tuple[np.ndarray, np.ndarray]:
    """(signal index, state index) per trial.

    Default draws i.i.d. from the joint; balanced mode cycles signals in
    blocks and draws states from each signal's conditional.
    """
    joint = structure.joint
    n_signals, n_states = joint.shape
    if not balanced:
        flat = joint.reshape(-1)
        cum = np.cumsum(flat)
        cum[-1] = 1.0
        cells = np.searchsorted(cum, rng.uniform(size=n_trials), side="right")
        return np.unravel_index(cells, (n_signals, n_states))
    v_idx = np.arange(n_trials) % n_signals
    t_idx = np.empty(n_trials, dtype=int)
    conditionals = joint / joint.sum(axis=1, keepdims=True)
    u = rng.uniform(size=n_trials)
    for v in range(n_signals):
        mask = v_idx == v
        cum = np.cumsum(conditionals[v])
        cum[-1] = 1.0
        t_idx[mask] = np.searchsorted(cum, u[mask], side="right")
    return v_idx, t_idx


def _scalar_axis(design: ExperimentDesign):
    """(from_belief, to_belief) for the design's scalar belief axis."""
    report_map = design.report_map or binary_report_map(len(design.states))
    return report_map.from_belief, report_map.to_belief


def simulate(design: ExperimentDesign, strategy: str, agent: AgentSpec,
             n_trials: int, seed: int, balanced: bool = False) -> list[TrialRecord]:
    """Run a synthetic agent through ``n_trials`` draws of one strategy.

    Returns trial records in draw order; identical inputs give identical
    records.
    """
    if n_trials < 1:
        raise InvalidModelError("need at least one trial")
    problem = design.problem(strategy)
    structure = problem.structure
    rng = np.random.default_rng(seed)
    v_idx, t_idx = _draw_stimuli(structure, n_trials, rng, balanced)

    if agent.task == "decision":
        responses = _decision_responses(design, strategy, agent, v_idx, rng)
    else:
        responses = _belief_responses(design, strategy, agent, v_idx, rng)

    records = []
    for i in range(n_trials):
        records.append(TrialRecord(
            trial_id=str(i),
            strategy=strategy,
            signal=structure.signals[v_idx[i]],
            state=problem.states.ids[t_idx[i]],
            response_kind="action" if agent.task == "decision" else "probability",
            response=responses[i],
        ))
    return records


def _posterior_matrix(problem) -> np.ndarray:
    structure = problem.structure
    return np.vstack([
        posterior(structure, v).probabilities for v in structure.signals
    ])


def _decision_responses(design, strategy, agent, v_idx, rng) -> list[str]:
    problem = design.problem(strategy)
    n = len(v_idx)
    action_ids = problem.actions.ids

    if agent.kind == "rational":
        per_signal = [
            optimal_action(problem, posterior(problem.structure, v))[0]
            for v in problem.structure.signals
        ]
        return [per_signal[v] for v in v_idx]

    if agent.kind == "prior":
        fixed, _ = optimal_action(problem, prior(problem.structure))
        return [fixed] * n

    if agent.kind == "uniform-random":
        picks = rng.integers(0, len(action_ids), size=n)
        return [action_ids[k] for k in picks]

    if agent.kind == "noisy-belief":
        beliefs = _noisy_beliefs(design, problem, v_idx, agent.noise_sd, rng)
        idx = optimal_action_indices(problem, beliefs)
        return [action_ids[k] for k in idx]

    # lapse: inner responses first, then replace a seeded fraction
    inner = _decision_responses(design, strategy, agent.inner, v_idx, rng)
    mask = rng.uniform(size=n) < agent.lapse_rate
    picks = rng.integers(0, len(action_ids), size=n)
    return [action_ids[picks[i]] if mask[i] else inner[i] for i in range(n)]


def _belief_responses(design, strategy, agent, v_idx, rng) -> list[float]:
    problem = design.problem(strategy)
    from_belief, _ = _scalar_axis(design)
    n = len(v_idx)

    if agent.kind in ("rational", "noisy-belief"):
        per_signal = np.array([
            from_belief(posterior(problem.structure, v))
            for v in problem.structure.signals
        ])
        reports = per_signal[v_idx]
        if agent.kind == "noisy-belief" and agent.noise_sd > 0:
            noise = rng.normal(0.0, agent.noise_sd, size=n)
            reports = _sigmoid(_logit(reports) + noise)
        return [float(r) for r in reports]

    if agent.kind == "prior":
        fixed = from_belief(prior(problem.structure))
        return [float(fixed)] * n

    if agent.kind == "uniform-random":
        return [float(u) for u in rng.uniform(size=n)]

    inner = _belief_responses(design, strategy, agent.inner, v_idx, rng)
    mask = rng.uniform(size=n) < agent.lapse_rate
    uniform = rng.uniform(size=n)
    return [float(uniform[i]) if mask[i] else inner[i] for i in range(n)]


def _noisy_beliefs(design, problem, v_idx, noise_sd, rng) -> np.ndarray:
    """Posterior beliefs perturbed in log-odds, one row per trial.

    Designs with a scalar belief axis (binary states, or an explicit report
    map) are perturbed along that axis, which keeps structured state spaces
    coherent; otherwise each component's log-odds is jittered independently
    and the vector renormalized.
    """
    n = len(v_idx)
    posteriors = _posterior_matrix(problem)
    if noise_sd == 0.0:
        return posteriors[v_idx]
    try:
        from_belief, to_belief = _scalar_axis(design)
    except InvalidModelError:
        raw = posteriors[v_idx]
        bumped = _sigmoid(_logit(raw) + rng.normal(0.0, noise_sd, size=raw.shape))
        return bumped / bumped.sum(axis=1, keepdims=True)
    axis = np.array([from_belief(Belief(row)) for row in posteriors])
    bumped = _sigmoid(_logit(axis[v_idx]) + rng.normal(0.0, noise_sd, size=n))
    return np.vstack([to_belief(float(r)).probabilities for r in bumped])
