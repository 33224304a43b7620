"""Run configuration: a JSON document with sections for angles, protocol,
errors, output, and quadrature options.

Syntax errors surface with the parser's line/column; semantic errors name the
JSON path of the offending field. Parsing then serializing then parsing again
reproduces the same configuration object exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import (
    ErrorDistribution,
    ErrorPolicy,
    SystematicErrorSchedule,
    schedule_as_policy,
)
from .lhv import TWO_PI
from .oracle import QuadratureSpec
from .protocol import SettingsQuad

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "parse_config_file",
    "serialize_config",
]


class ConfigError(ValueError):
    """A configuration document is syntactically or semantically invalid."""


_SETTING_NAMES = {
    "a": ("A", "primary"),
    "a_prime": ("A", "alternate"),
    "b": ("B", "primary"),
    "b_prime": ("B", "alternate"),
}


@dataclass(frozen=True)
class RunConfig:
    """Parsed and validated run configuration."""

    quad: SettingsQuad
    protocol_kind: str
    seed: int
    trials_per_pair: int | None = None
    total_trials: int | None = None
    shifted_estimator: bool = False
    shifted_trials: int | None = None
    policy: ErrorPolicy = field(default_factory=ErrorPolicy.zero)
    schedule: SystematicErrorSchedule | None = None
    report_path: str | None = None
    trial_log_path: str | None = None
    figures: bool = False
    quadrature: QuadratureSpec = QuadratureSpec()

    @property
    def trials(self) -> int:
        return self.trials_per_pair if self.protocol_kind == "sequenced" else self.total_trials

    def with_trials(self, trials: int) -> "RunConfig":
        if self.protocol_kind == "sequenced":
            return replace(self, trials_per_pair=trials)
        return replace(self, total_trials=trials)


def _require(section: Mapping, key: str, path: str) -> Any:
    if key not in section:
        raise ConfigError(f"{path}.{key}: missing required field")
    return section[key]


def _as_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _as_int(value: Any, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    return value


def _as_section(value: Any, path: str) -> Mapping:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object")
    return value


def _angle(value: Any, path: str) -> float:
    x = _as_number(value, path)
    if abs(x) > 2.0 * TWO_PI:
        raise ConfigError(
            f"{path}: {x:g} is too large for radians — if this is degrees, "
            f"use {math.radians(x):.6g} rad instead"
        )
    return x


def _parse_angles(section: Mapping) -> SettingsQuad:
    sec = _as_section(section, "angles")
    known = {"theta_a", "theta_a_prime", "theta_b", "theta_b_prime"}
    for key in sec:
        if key not in known:
            raise ConfigError(f"angles.{key}: unknown field")
    return SettingsQuad(
        theta_a=_angle(_require(sec, "theta_a", "angles"), "angles.theta_a"),
        theta_a_prime=_angle(_require(sec, "theta_a_prime", "angles"), "angles.theta_a_prime"),
        theta_b=_angle(_require(sec, "theta_b", "angles"), "angles.theta_b"),
        theta_b_prime=_angle(_require(sec, "theta_b_prime", "angles"), "angles.theta_b_prime"),
    )


def _parse_distribution(data: Any, path: str) -> ErrorDistribution:
    sec = _as_section(data, path)
    try:
        return ErrorDistribution.from_dict(sec)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_schedule(data: Mapping, path: str) -> SystematicErrorSchedule:
    sec = _as_section(data, path)
    kwargs: dict[str, float] = {}
    for name in ("alpha", "beta", "gamma", "delta"):
        kwargs[name] = _as_number(_require(sec, name, path), f"{path}.{name}")
    alice = sec.get("alice")
    if alice is not None:
        alice_sec = _as_section(alice, f"{path}.alice")
        for name in ("alpha", "beta", "gamma", "delta"):
            if name in alice_sec:
                kwargs[f"alice_{name}"] = _as_number(alice_sec[name], f"{path}.alice.{name}")
    for key in sec:
        if key not in ("alpha", "beta", "gamma", "delta", "alice"):
            raise ConfigError(f"{path}.{key}: unknown field")
    try:
        return SystematicErrorSchedule(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _policy_key(name: str, contextual: bool, path: str) -> tuple:
    if not contextual:
        if name not in _SETTING_NAMES:
            raise ConfigError(f"{path}: unknown setting name {name!r}")
        return _SETTING_NAMES[name]
    try:
        own_name, partner_name = name.split("|")
        side, own = _SETTING_NAMES[own_name]
        partner_side, partner = _SETTING_NAMES[partner_name]
    except (ValueError, KeyError):
        raise ConfigError(f"{path}: bad context key {name!r} (expected 'own|partner')") from None
    if partner_side == side:
        raise ConfigError(f"{path}: context key {name!r} pairs two settings of the same party")
    return (side, own, partner)


def _parse_errors(section: Any) -> tuple[ErrorPolicy, SystematicErrorSchedule | None]:
    if section is None:
        return ErrorPolicy.zero(), None
    sec = _as_section(section, "errors")
    if "schedule" in sec:
        if "mode" in sec or "distributions" in sec:
            raise ConfigError("errors: give either 'schedule' or 'mode'+'distributions', not both")
        schedule = _parse_schedule(sec["schedule"], "errors.schedule")
        return schedule_as_policy(schedule), schedule

    mode = _require(sec, "mode", "errors")
    if mode not in ("setting_local", "context_dependent"):
        raise ConfigError(f"errors.mode: unknown mode {mode!r}")
    dists = _as_section(_require(sec, "distributions", "errors"), "errors.distributions")
    contextual = mode == "context_dependent"
    table = {}
    for name, data in dists.items():
        key = _policy_key(name, contextual, f"errors.distributions.{name}")
        table[key] = _parse_distribution(data, f"errors.distributions.{name}")
    try:
        if contextual:
            return ErrorPolicy.context_dependent(table), None
        by_name = {name: table[_SETTING_NAMES[name]] for name in dists}
        return ErrorPolicy.setting_local(**by_name), None
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"errors: {exc}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse a JSON configuration document into a validated RunConfig."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("top level: expected a JSON object")

    for key in doc:
        if key not in ("angles", "protocol", "errors", "output", "oracle"):
            raise ConfigError(f"{key}: unknown section")

    quad = _parse_angles(_require(doc, "angles", "(top level)"))

    proto = _as_section(_require(doc, "protocol", "(top level)"), "protocol")
    kind = _require(proto, "kind", "protocol")
    if kind not in ("sequenced", "random_choice"):
        raise ConfigError(f"protocol.kind: unknown protocol {kind!r}")
    seed = _as_int(_require(proto, "seed", "protocol"), "protocol.seed", minimum=0)
    trials_per_pair = total_trials = None
    if kind == "sequenced":
        trials_per_pair = _as_int(
            _require(proto, "trials_per_pair", "protocol"), "protocol.trials_per_pair", minimum=1
        )
    else:
        total_trials = _as_int(
            _require(proto, "total_trials", "protocol"), "protocol.total_trials", minimum=1
        )
    shifted_estimator = proto.get("shifted_estimator", False)
    if not isinstance(shifted_estimator, bool):
        raise ConfigError("protocol.shifted_estimator: expected true or false")
    shifted_trials = None
    if "shifted_trials" in proto:
        shifted_trials = _as_int(proto["shifted_trials"], "protocol.shifted_trials", minimum=1)
    for key in proto:
        known = ("kind", "seed", "trials_per_pair", "total_trials",
                 "shifted_estimator", "shifted_trials")
        if key not in known:
            raise ConfigError(f"protocol.{key}: unknown field")

    policy, schedule = _parse_errors(doc.get("errors"))

    report_path = trial_log_path = None
    figures = False
    if "output" in doc:
        out = _as_section(doc["output"], "output")
        for key in out:
            if key not in ("report", "trial_log", "figures"):
                raise ConfigError(f"output.{key}: unknown field")
        if "report" in out and out["report"] is not None:
            if not isinstance(out["report"], str):
                raise ConfigError("output.report: expected a path string")
            report_path = out["report"]
        if "trial_log" in out and out["trial_log"] is not None:
            if not isinstance(out["trial_log"], str):
                raise ConfigError("output.trial_log: expected a path string")
            trial_log_path = out["trial_log"]
        figures = out.get("figures", False)
        if not isinstance(figures, bool):
            raise ConfigError("output.figures: expected true or false")

    quadrature = QuadratureSpec()
    if "oracle" in doc:
        osec = _as_section(doc["oracle"], "oracle")
        for key in osec:
            if key not in ("lambda_nodes", "error_nodes", "tolerance"):
                raise ConfigError(f"oracle.{key}: unknown field")
        try:
            quadrature = QuadratureSpec(
                lambda_nodes=_as_int(osec.get("lambda_nodes", 4096), "oracle.lambda_nodes"),
                error_nodes=_as_int(osec.get("error_nodes", 64), "oracle.error_nodes"),
                tolerance=_as_number(osec.get("tolerance", 1e-9), "oracle.tolerance"),
            )
        except ValueError as exc:
            raise ConfigError(f"oracle: {exc}") from exc

    return RunConfig(
        quad=quad,
        protocol_kind=kind,
        seed=seed,
        trials_per_pair=trials_per_pair,
        total_trials=total_trials,
        shifted_estimator=shifted_estimator,
        shifted_trials=shifted_trials,
        policy=policy,
        schedule=schedule,
        report_path=report_path,
        trial_log_path=trial_log_path,
        figures=figures,
        quadrature=quadrature,
    )


def parse_config_file(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def serialize_config(cfg: RunConfig) -> dict:
    """Canonical dict form; parse(json.dumps(...)) reproduces ``cfg`` exactly."""
    doc: dict[str, Any] = {
        "angles": {
            "theta_a": cfg.quad.theta_a,
            "theta_a_prime": cfg.quad.theta_a_prime,
            "theta_b": cfg.quad.theta_b,
            "theta_b_prime": cfg.quad.theta_b_prime,
        },
        "protocol": {"kind": cfg.protocol_kind, "seed": cfg.seed},
    }
    if cfg.protocol_kind == "sequenced":
        doc["protocol"]["trials_per_pair"] = cfg.trials_per_pair
    else:
        doc["protocol"]["total_trials"] = cfg.total_trials
    if cfg.shifted_estimator:
        doc["protocol"]["shifted_estimator"] = True
    if cfg.shifted_trials is not None:
        doc["protocol"]["shifted_trials"] = cfg.shifted_trials

    if cfg.schedule is not None:
        sched: dict[str, Any] = {
            "alpha": cfg.schedule.alpha,
            "beta": cfg.schedule.beta,
            "gamma": cfg.schedule.gamma,
            "delta": cfg.schedule.delta,
        }
        if any(cfg.schedule.alice_offsets()):
            sched["alice"] = {
                "alpha": cfg.schedule.alice_alpha,
                "beta": cfg.schedule.alice_beta,
                "gamma": cfg.schedule.alice_gamma,
                "delta": cfg.schedule.alice_delta,
            }
        doc["errors"] = {"schedule": sched}
    else:
        doc["errors"] = cfg.policy.to_dict()

    output: dict[str, Any] = {}
    if cfg.report_path is not None:
        output["report"] = cfg.report_path
    if cfg.trial_log_path is not None:
        output["trial_log"] = cfg.trial_log_path
    if cfg.figures:
        output["figures"] = True
    if output:
        doc["output"] = output

    if cfg.quadrature != QuadratureSpec():
        doc["oracle"] = {
            "lambda_nodes": cfg.quadrature.lambda_nodes,
            "error_nodes": cfg.quadrature.error_nodes,
            "tolerance": cfg.quadrature.tolerance,
        }
    return doc
