"""JSON design configs: a versioned, diffable serialization of experiment
designs.

Exports are canonical (explicit joint tables); the loader additionally
accepts generative-model specs in place of tables. Loading collects every
violation it can find before failing, so a bad config produces one complete
report instead of a cascade.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidModelError
from .generative import (
    GaussianThresholdDGM,
    TwoTeamDGM,
    kale_joint,
    two_team_report_map,
    weather_joint,
)
from .model import (
    ActionSpace,
    ExperimentDesign,
    InformationStructure,
    MatrixRule,
    ReportMap,
    StateSpace,
    TransitRule,
    binary_report_map,
    structure_violations,
)
from .payment import (
    AffineConversion,
    FlooredAffineConversion,
    ShiftedAffineConversion,
)

SCHEMA_VERSION = 1


def _report_map_by_name(name: str, n_states: int) -> ReportMap:
    if name == "binary":
        return binary_report_map(n_states)
    if name == "pos-to-win":
        return two_team_report_map()
    raise ConfigError(f"unknown report map {name!r}")


def design_to_config(design: ExperimentDesign) -> dict:
    """Canonical JSON-ready form of a design (explicit tables throughout)."""
    states: dict = {"ids": list(design.states.ids)}
    if design.states.labels:
        states["labels"] = list(design.states.labels)
    if design.states.values is not None:
        states["values"] = list(design.states.values)

    actions: dict = {"kind": design.actions.kind, "ids": list(design.actions.ids)}
    if design.actions.values is not None:
        actions["values"] = list(design.actions.values)
    if design.actions.bin_width is not None:
        actions["bin_width"] = design.actions.bin_width

    rule = design.rule
    if isinstance(rule, MatrixRule):
        rule_cfg: dict = {"kind": "matrix", "scores": rule.scores.tolist()}
    else:
        rule_cfg = {
            "kind": "transit",
            "activity_rate": rule.activity_rate,
            "waiting_rate": rule.waiting_rate,
            "destination_rate": rule.destination_rate,
            "max_destination_minutes": rule.max_destination_minutes,
            "second_bus_offset": rule.second_bus_offset,
        }

    strategies = {
        name: {"signals": list(s.signals), "joint": s.joint.tolist()}
        for name, s in design.strategies.items()
    }

    conversion = None
    if design.conversion is not None:
        c = design.conversion
        if isinstance(c, AffineConversion):
            conversion = {"kind": "affine", "base": c.base, "rate": c.rate}
        elif isinstance(c, FlooredAffineConversion):
            conversion = {"kind": "floored-affine", "base": c.base,
                          "rate": c.rate, "floor": c.floor}
        elif isinstance(c, ShiftedAffineConversion):
            conversion = {"kind": "shifted-affine", "base": c.base,
                          "rate": c.rate, "shift": c.shift}
        else:
            raise ConfigError(f"cannot serialize conversion {type(c).__name__}")

    return {
        "schema_version": SCHEMA_VERSION,
        "name": design.name,
        "states": states,
        "actions": actions,
        "rule": rule_cfg,
        "strategies": strategies,
        "conversion": conversion,
        "trials_per_experiment": design.trials_per_experiment,
        "initial_score": design.initial_score,
        "report_map": design.report_map.name if design.report_map else None,
    }


def save_design_config(design: ExperimentDesign, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(design_to_config(design), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_actions(cfg: dict) -> ActionSpace:
    kind = cfg.get("kind", "finite")
    if "ids" in cfg:
        return ActionSpace(
            ids=tuple(cfg["ids"]),
            kind=kind,
            values=tuple(cfg["values"]) if cfg.get("values") is not None else None,
            bin_width=cfg.get("bin_width"),
        )
    if kind == "grid":
        return ActionSpace.integer_grid(cfg["low"], cfg["high"],
                                        cfg.get("step", 1))
    raise ConfigError("action space needs ids, or a grid low/high")


def _load_strategy(name: str, cfg: dict) -> InformationStructure:
    if "dgm" in cfg:
        dgm_cfg = dict(cfg["dgm"])
        dgm_kind = dgm_cfg.pop("kind", None)
        if dgm_kind == "gaussian-threshold":
            sigmas = dgm_cfg.pop("sigmas")
            return weather_joint(GaussianThresholdDGM.uniform_sigmas(
                mean=dgm_cfg["mean"], sigmas=sigmas,
                threshold=dgm_cfg.get("threshold", 0.0),
                direction=dgm_cfg.get("direction", "below"),
            ))
        if dgm_kind == "two-team":
            levels = dgm_cfg.get("pos_levels")
            dgm = TwoTeamDGM(pos_levels=tuple(levels)) if levels else TwoTeamDGM()
            return kale_joint(dgm)
        raise ConfigError(f"strategy {name!r}: unknown dgm kind {dgm_kind!r}")
    if "signals" not in cfg or "joint" not in cfg:
        raise ConfigError(f"strategy {name!r} needs signals and joint (or a dgm)")
    return InformationStructure(
        signals=tuple(cfg["signals"]), joint=np.array(cfg["joint"], dtype=float),
        check=False,
    )


def _load_conversion(cfg: dict | None):
    if cfg is None:
        return None
    kind = cfg.get("kind")
    if kind == "affine":
        return AffineConversion(base=cfg["base"], rate=cfg["rate"])
    if kind == "floored-affine":
        return FlooredAffineConversion(base=cfg["base"], rate=cfg["rate"],
                                       floor=cfg["floor"])
    if kind == "shifted-affine":
        return ShiftedAffineConversion(base=cfg["base"], rate=cfg["rate"],
                                       shift=cfg["shift"])
    raise ConfigError(f"unknown conversion kind {kind!r}")


def design_from_config(cfg: dict) -> ExperimentDesign:
    """Build a design from a parsed config, reporting every violation found."""
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be an object")
    version = cfg.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})"
        )
    for field in ("states", "actions", "rule", "strategies"):
        if field not in cfg:
            raise ConfigError(f"config is missing the {field!r} section")

    violations: list[str] = []
    try:
        states_cfg = cfg["states"]
        states = StateSpace(
            ids=tuple(states_cfg["ids"]),
            labels=tuple(states_cfg.get("labels", ())),
            values=tuple(states_cfg["values"])
            if states_cfg.get("values") is not None else None,
        )
    except (KeyError, TypeError, InvalidModelError) as err:
        raise ConfigError(f"states: {err}") from None

    try:
        actions = _load_actions(cfg["actions"])
    except (KeyError, TypeError, InvalidModelError) as err:
        raise ConfigError(f"actions: {err}") from None

    rule_cfg = cfg["rule"]
    kind = rule_cfg.get("kind")
    try:
        if kind == "matrix":
            rule = MatrixRule(np.array(rule_cfg["scores"], dtype=float))
        elif kind == "transit":
            rule = TransitRule(
                activity_rate=rule_cfg["activity_rate"],
                waiting_rate=rule_cfg["waiting_rate"],
                destination_rate=rule_cfg["destination_rate"],
                max_destination_minutes=rule_cfg["max_destination_minutes"],
                second_bus_offset=rule_cfg.get("second_bus_offset", 30.0),
            )
        else:
            raise ConfigError(f"unknown rule kind {kind!r}")
    except (KeyError, TypeError, InvalidModelError) as err:
        raise ConfigError(f"rule: {err}") from None

    strategies = {}
    for name, s_cfg in cfg["strategies"].items():
        structure = _load_strategy(name, s_cfg)
        problems = structure_violations(structure.signals, structure.joint)
        if structure.joint.ndim == 2 and structure.joint.shape[1] != len(states):
            problems.append(
                f"dimension: joint has {structure.joint.shape[1]} states but "
                f"the space has {len(states)}"
            )
        violations.extend(f"strategy {name!r}: {p}" for p in problems)
        strategies[name] = structure

    if isinstance(rule, MatrixRule):
        if rule.n_actions != len(actions):
            violations.append(
                f"rule: score matrix has {rule.n_actions} actions but the "
                f"space has {len(actions)}"
            )
        if rule.n_states != len(states):
            violations.append(
                f"rule: score matrix has {rule.n_states} states but the "
                f"space has {len(states)}"
            )
    else:
        if actions.values is None:
            violations.append("rule: transit rule needs numeric action values")
        if states.values is None:
            violations.append("rule: transit rule needs numeric state values")

    if violations:
        raise ConfigError("; ".join(violations))

    # re-validate through the checked constructor now that shapes are sane
    strategies = {
        name: InformationStructure(signals=s.signals, joint=s.joint)
        for name, s in strategies.items()
    }
    report_map = None
    if cfg.get("report_map"):
        report_map = _report_map_by_name(cfg["report_map"], len(states))
    try:
        return ExperimentDesign(
            states=states,
            actions=actions,
            rule=rule,
            strategies=strategies,
            conversion=_load_conversion(cfg.get("conversion")),
            trials_per_experiment=int(cfg.get("trials_per_experiment", 1)),
            initial_score=float(cfg.get("initial_score", 0.0)),
            report_map=report_map,
            name=str(cfg.get("name", "design")),
        )
    except InvalidModelError as err:
        raise ConfigError(str(err)) from None


def load_design_config(path: str | Path) -> ExperimentDesign:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from None
    return design_from_config(cfg)
