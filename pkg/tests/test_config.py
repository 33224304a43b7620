import json
import math

import pytest

from belllab.config import ConfigError, parse_config, parse_config_file, serialize_config
from belllab.errors import DeltaError, TruncatedGaussianError, UniformError
from belllab.oracle import QuadratureSpec

BASE = {
    "angles": {
        "theta_a": math.pi / 2,
        "theta_a_prime": 0.0,
        "theta_b": math.pi / 4,
        "theta_b_prime": 3 * math.pi / 4,
    },
    "protocol": {"kind": "sequenced", "trials_per_pair": 1000, "seed": 7},
}


def cfg_text(**overrides):
    doc = json.loads(json.dumps(BASE))
    doc.update(overrides)
    return json.dumps(doc)


def test_minimal_config_parses():
    cfg = parse_config(cfg_text())
    assert cfg.protocol_kind == "sequenced"
    assert cfg.trials_per_pair == 1000
    assert cfg.seed == 7
    assert cfg.policy.mode == "setting_local"
    assert cfg.quadrature == QuadratureSpec()


def test_round_trip_identity_schedule():
    text = cfg_text(
        errors={"schedule": {"alpha": 0.02, "beta": -0.01, "gamma": 0.0, "delta": 0.03,
                             "alice": {"alpha": 0.01}}},
        output={"report": "r.json", "trial_log": "t.csv", "figures": True},
        oracle={"lambda_nodes": 8192, "error_nodes": 128, "tolerance": 1e-10},
    )
    cfg = parse_config(text)
    again = parse_config(json.dumps(serialize_config(cfg)))
    assert again == cfg


def test_round_trip_identity_policies():
    for errors in (
        {"mode": "setting_local", "distributions": {
            "b": {"kind": "uniform", "center": 0.0, "halfwidth": 0.1},
            "a_prime": {"kind": "truncated_gaussian", "mean": 0.0, "sd": 0.05, "bound": 0.2},
        }},
        {"mode": "context_dependent", "distributions": {
            "b|a": {"kind": "delta", "offset": 0.01},
            "b|a_prime": {"kind": "delta", "offset": -0.02},
        }},
    ):
        cfg = parse_config(cfg_text(errors=errors))
        again = parse_config(json.dumps(serialize_config(cfg)))
        assert again == cfg


def test_random_choice_config():
    text = cfg_text(protocol={"kind": "random_choice", "total_trials": 5000, "seed": 1})
    cfg = parse_config(text)
    assert cfg.total_trials == 5000
    assert cfg.trials == 5000
    assert cfg.with_trials(9000).total_trials == 9000


def test_policy_distributions_parsed():
    text = cfg_text(errors={"mode": "setting_local", "distributions": {
        "a": {"kind": "delta", "offset": 0.05},
        "b": {"kind": "uniform", "center": 0.0, "halfwidth": 0.2},
        "b_prime": {"kind": "truncated_gaussian", "mean": 0.0, "sd": 0.1, "bound": 0.3},
    }})
    cfg = parse_config(text)
    assert cfg.policy.table[("A", "primary")] == DeltaError(0.05)
    assert cfg.policy.table[("B", "primary")] == UniformError(center=0.0, halfwidth=0.2)
    assert cfg.policy.table[("B", "alternate")] == TruncatedGaussianError(0.0, 0.1, 0.3)
    assert cfg.policy.table[("A", "alternate")] == DeltaError(0.0)


def test_syntax_error_reports_line():
    with pytest.raises(ConfigError, match=r"line \d+"):
        parse_config('{"angles": \n{,}')


def test_semantic_errors_name_the_path():
    with pytest.raises(ConfigError, match="angles.theta_b"):
        parse_config(cfg_text(angles={"theta_a": 0.0, "theta_a_prime": 0.0,
                                      "theta_b": "x", "theta_b_prime": 0.0}))
    with pytest.raises(ConfigError, match="protocol.trials_per_pair"):
        parse_config(cfg_text(protocol={"kind": "sequenced", "trials_per_pair": 0, "seed": 1}))
    with pytest.raises(ConfigError, match="protocol.kind"):
        parse_config(cfg_text(protocol={"kind": "simultaneous", "total_trials": 5, "seed": 1}))
    with pytest.raises(ConfigError, match="errors.schedule"):
        parse_config(cfg_text(errors={"schedule": {"alpha": 2.0, "beta": 0, "gamma": 0,
                                                   "delta": 0}}))
    with pytest.raises(ConfigError, match="errors.distributions.b"):
        parse_config(cfg_text(errors={"mode": "setting_local", "distributions": {
            "b": {"kind": "uniform", "center": 0.9, "halfwidth": 0.1}}}))


def test_degree_input_rejected_with_hint():
    bad = dict(BASE["angles"])
    bad["theta_a"] = 90.0
    with pytest.raises(ConfigError, match="degrees"):
        parse_config(cfg_text(angles=bad))


def test_unknown_fields_rejected():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config(cfg_text(extras={}))
    with pytest.raises(ConfigError, match="protocol.cadence"):
        parse_config(cfg_text(protocol={"kind": "sequenced", "trials_per_pair": 5,
                                        "seed": 1, "cadence": 2}))
    with pytest.raises(ConfigError, match="unknown setting name"):
        parse_config(cfg_text(errors={"mode": "setting_local",
                                      "distributions": {"c": {"kind": "delta", "offset": 0}}}))


def test_context_key_crossing_sides_required():
    with pytest.raises(ConfigError, match="same party"):
        parse_config(cfg_text(errors={"mode": "context_dependent", "distributions": {
            "b|b_prime": {"kind": "delta", "offset": 0.0}}}))


def test_both_schedule_and_mode_rejected():
    with pytest.raises(ConfigError, match="not both"):
        parse_config(cfg_text(errors={
            "schedule": {"alpha": 0, "beta": 0, "gamma": 0, "delta": 0},
            "mode": "setting_local", "distributions": {},
        }))


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config_file(tmp_path / "nope.json")


def test_shifted_estimator_flags():
    text = cfg_text(protocol={"kind": "sequenced", "trials_per_pair": 10, "seed": 1,
                              "shifted_estimator": True, "shifted_trials": 44})
    cfg = parse_config(text)
    assert cfg.shifted_estimator and cfg.shifted_trials == 44
    again = parse_config(json.dumps(serialize_config(cfg)))
    assert again == cfg
