"""Command implementations behind the CLI: run, estimate, and assemble reports.

Reports are plain dicts with a fixed key layout (``belllab.report.v1``) so
they serialize deterministically — a run repeated with the same seed produces
byte-identical report files regardless of worker count.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

from .config import ConfigError, RunConfig, serialize_config
from .errors import ERROR_BOUND, ErrorPolicy, SystematicErrorSchedule, schedule_as_policy
from .estimator import (
    ChshReport,
    Correlator,
    JointCounts,
    JointProbabilities,
    chsh,
    correlator_from_cells,
    correlator_from_shifted_pp,
    probabilities,
    tally,
)
from .lhv import canonical_model
from .oracle import (
    block_distributions,
    smoothed_joint_probs,
    sprime_smoothed,
    sprime_systematic,
)
from .presets import (
    DEFAULT_REPRODUCE_SEED,
    DEFAULT_REPRODUCE_TRIALS,
    DEMO_QUAD,
    DEMO_SCHEDULE,
)
from .protocol import PAIR_ORDER, RunPlan, TrialLog, run_pair, run_random_choice, run_sequenced
from .rng import derive_run_seed

__all__ = [
    "REPORT_SCHEMA",
    "SCAN_PARAMS",
    "oracle_report",
    "reproduce_config",
    "scan_rows",
    "simulate_report",
    "validate_report",
    "write_report",
    "write_scan_csv",
]

REPORT_SCHEMA = "belllab.report.v1"
SCAN_PARAMS = ("alpha", "beta", "gamma", "delta")

_PAIR_JSON_KEYS = {"ab": "ab", "ab'": "ab_prime", "a'b": "aprime_b", "a'b'": "aprime_bprime"}

# settings shifts, after the base pair, at which the ++ rate feeds the
# shifted-settings correlator: (θa+π, θb+π), (θa, θb+π), (θa+π, θb)
_PP_SHIFTS = ((math.pi, math.pi), (0.0, math.pi), (math.pi, 0.0))


def _counts_dict(c: JointCounts) -> dict:
    return {"pp": c.n_pp, "pm": c.n_pm, "mp": c.n_mp, "mm": c.n_mm, "total": c.total}


def _probs_dict(p: JointProbabilities) -> dict:
    return {
        "pp": p.p_pp, "pm": p.p_pm, "mp": p.p_mp, "mm": p.p_mm,
        "se_pp": p.se_pp, "se_pm": p.se_pm, "se_mp": p.se_mp, "se_mm": p.se_mm,
    }


def _correlator_dict(e: Correlator | None) -> dict | None:
    if e is None:
        return None
    return {"value": e.value, "se": e.se}


def _oracle_sprime(cfg: RunConfig) -> float:
    if cfg.schedule is not None:
        return sprime_systematic(cfg.quad, cfg.schedule)
    return sprime_smoothed(canonical_model(), cfg.quad, cfg.policy, cfg.quadrature)


def _oracle_pairs(cfg: RunConfig) -> dict:
    """Per-pair analytic cells and correlator under the configured errors."""
    model = canonical_model()
    out = {}
    for pair in PAIR_ORDER:
        dist_a, dist_b = block_distributions(cfg.policy, pair)
        probs = smoothed_joint_probs(
            model,
            cfg.quad.angle("A", pair.a_choice), dist_a,
            cfg.quad.angle("B", pair.b_choice), dist_b,
            cfg.quadrature,
        )
        out[pair] = (probs, correlator_from_cells(probs).value)
    return out


def _chsh_block(report: ChshReport | None, oracle_s: float, closure_applies: bool) -> dict:
    if report is None:
        return {
            "s": None,
            "se": None,
            "oracle_s": oracle_s,
            "exceeds_2": oracle_s > 2.0,
            "significance_sigma": None,
            "closure_applies": closure_applies,
        }
    sig = (report.s - 2.0) / report.s_se if report.s_se > 0 else None
    return {
        "s": report.s,
        "se": report.s_se,
        "oracle_s": oracle_s,
        "exceeds_2": report.s > 2.0,
        "significance_sigma": sig,
        "closure_applies": closure_applies,
    }


def _shifted_correlator(cfg: RunConfig, pair, base_probs: JointProbabilities) -> Correlator:
    """Measure the shifted-settings correlator for one pair.

    The unshifted ++ rate comes from the main run; the three shifted rates
    come from dedicated fixed-pair runs at displaced nominal angles, under the
    same error context, each on its own derived seed.
    """
    model = canonical_model()
    trials = cfg.shifted_trials or cfg.trials
    theta_a = cfg.quad.angle("A", pair.a_choice)
    theta_b = cfg.quad.angle("B", pair.b_choice)
    inputs = [(base_probs.p_pp, base_probs.se_pp)]
    for j, (da, db) in enumerate(_PP_SHIFTS):
        seed_j = derive_run_seed(cfg.seed, f"shifted_estimator:{pair.code}:{j}")
        log = run_pair(model, cfg.policy, pair, theta_a + da, theta_b + db, trials, seed_j)
        shifted = probabilities(tally(log)[pair])
        inputs.append((shifted.p_pp, shifted.se_pp))
    return correlator_from_shifted_pp(inputs)


def simulate_report(cfg: RunConfig, workers: int = 1) -> tuple[dict, TrialLog]:
    """Run the configured protocol and assemble the full report."""
    model = canonical_model()
    plan = RunPlan(
        protocol_kind=cfg.protocol_kind,
        quad=cfg.quad,
        policy=cfg.policy,
        seed=cfg.seed,
        trials_per_pair=cfg.trials_per_pair,
        total_trials=cfg.total_trials,
    )
    if cfg.protocol_kind == "sequenced":
        log = run_sequenced(model, plan, workers=workers)
    else:
        log = run_random_choice(model, plan, workers=workers)

    counts = tally(log)
    probs = {pair: probabilities(counts[pair]) for pair in PAIR_ORDER}
    corr = {pair: correlator_from_cells(probs[pair]) for pair in PAIR_ORDER}
    shifted = {}
    if cfg.shifted_estimator:
        shifted = {pair: _shifted_correlator(cfg, pair, probs[pair]) for pair in PAIR_ORDER}

    by_code = {pair.code: corr[pair] for pair in PAIR_ORDER}
    report_chsh = chsh(
        by_code["ab"], by_code["a'b"], by_code["ab'"], by_code["a'b'"],
        protocol_kind=cfg.protocol_kind,
        seed=cfg.seed,
        totals=tuple(counts[pair].total for pair in PAIR_ORDER),
    )
    oracle_pairs = _oracle_pairs(cfg)

    pairs_block = {}
    for pair in PAIR_ORDER:
        o_probs, o_corr = oracle_pairs[pair]
        pairs_block[_PAIR_JSON_KEYS[pair.code]] = {
            "pair": pair.code,
            "nominal_angles": [
                cfg.quad.angle("A", pair.a_choice),
                cfg.quad.angle("B", pair.b_choice),
            ],
            "counts": _counts_dict(counts[pair]),
            "probabilities": _probs_dict(probs[pair]),
            "correlator_from_cells": _correlator_dict(corr[pair]),
            "correlator_from_shifted_pp": _correlator_dict(shifted.get(pair)),
            "oracle": {"probabilities": _probs_dict(o_probs), "correlator": o_corr},
        }

    protocol_block = {"kind": cfg.protocol_kind, "seed": cfg.seed}
    if cfg.protocol_kind == "sequenced":
        protocol_block["trials_per_pair"] = cfg.trials_per_pair
    else:
        protocol_block["total_trials"] = cfg.total_trials

    report = {
        "schema": REPORT_SCHEMA,
        "mode": "simulate",
        "config": serialize_config(cfg),
        "protocol": protocol_block,
        "pairs": pairs_block,
        "chsh": _chsh_block(
            report_chsh, _oracle_sprime(cfg), cfg.policy.mode == "setting_local"
        ),
    }
    return report, log


def oracle_report(cfg: RunConfig) -> dict:
    """Pure-oracle report: analytic predictions only, no simulation."""
    oracle_pairs = _oracle_pairs(cfg)
    pairs_block = {}
    for pair in PAIR_ORDER:
        o_probs, o_corr = oracle_pairs[pair]
        pairs_block[_PAIR_JSON_KEYS[pair.code]] = {
            "pair": pair.code,
            "nominal_angles": [
                cfg.quad.angle("A", pair.a_choice),
                cfg.quad.angle("B", pair.b_choice),
            ],
            "counts": None,
            "probabilities": None,
            "correlator_from_cells": None,
            "correlator_from_shifted_pp": None,
            "oracle": {"probabilities": _probs_dict(o_probs), "correlator": o_corr},
        }
    return {
        "schema": REPORT_SCHEMA,
        "mode": "oracle",
        "config": serialize_config(cfg),
        "protocol": None,
        "pairs": pairs_block,
        "chsh": _chsh_block(None, _oracle_sprime(cfg), cfg.policy.mode == "setting_local"),
    }


def scan_rows(cfg: RunConfig, param: str, start: float, stop: float, steps: int) -> list[dict]:
    """Sweep one block offset: oracle S' and a sequenced MC estimate per step."""
    if param not in SCAN_PARAMS:
        raise ConfigError(f"scan parameter must be one of {SCAN_PARAMS}, got {param!r}")
    if steps < 2:
        raise ConfigError("scan requires steps >= 2")
    for name, v in (("from", start), ("to", stop)):
        if not (-ERROR_BOUND < v < ERROR_BOUND):
            raise ConfigError(f"scan {name}={v:.6g} outside the offset range (-pi/4, pi/4)")
    if cfg.protocol_kind != "sequenced":
        raise ConfigError("scan sweeps per-block offsets; protocol.kind must be 'sequenced'")
    base = cfg.schedule
    if base is None:
        if cfg.policy != ErrorPolicy.zero():
            raise ConfigError("scan requires schedule-style errors (or none) in the config")
        base = SystematicErrorSchedule(0.0, 0.0, 0.0, 0.0)

    model = canonical_model()
    rows = []
    for i in range(steps):
        value = start + (stop - start) * i / (steps - 1)
        sched = dataclasses.replace(base, **{param: value})
        oracle_s = sprime_systematic(cfg.quad, sched)
        seed_i = derive_run_seed(cfg.seed, f"scan:{param}:{i}")
        plan = RunPlan(
            protocol_kind="sequenced",
            quad=cfg.quad,
            policy=schedule_as_policy(sched),
            seed=seed_i,
            trials_per_pair=cfg.trials_per_pair,
        )
        log = run_sequenced(model, plan)
        counts = tally(log)
        corr = {p.code: correlator_from_cells(probabilities(counts[p])) for p in PAIR_ORDER}
        rep = chsh(corr["ab"], corr["a'b"], corr["ab'"], corr["a'b'"])
        rows.append(
            {"value": value, "oracle_sprime": oracle_s, "mc_sprime": rep.s, "mc_se": rep.s_se}
        )
    return rows


def write_scan_csv(rows: list[dict], param: str, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scan_csv_text(rows, param))


def scan_csv_text(rows: list[dict], param: str) -> str:
    lines = [f"{param},oracle_sprime,mc_sprime,mc_se"]
    for row in rows:
        lines.append(
            f"{row['value']:.12g},{row['oracle_sprime']:.12g},"
            f"{row['mc_sprime']:.12g},{row['mc_se']:.12g}"
        )
    return "\n".join(lines) + "\n"


def reproduce_config(
    trials: int = DEFAULT_REPRODUCE_TRIALS,
    seed: int = DEFAULT_REPRODUCE_SEED,
    report_path: str | None = None,
    trial_log_path: str | None = None,
    figures: bool = False,
    zero_offsets: bool = False,
) -> RunConfig:
    """The built-in demonstration preset as a ready-to-run configuration."""
    schedule = SystematicErrorSchedule(0.0, 0.0, 0.0, 0.0) if zero_offsets else DEMO_SCHEDULE
    return RunConfig(
        quad=DEMO_QUAD,
        protocol_kind="sequenced",
        seed=seed,
        trials_per_pair=trials,
        policy=schedule_as_policy(schedule),
        schedule=schedule,
        report_path=report_path,
        trial_log_path=trial_log_path,
        figures=figures,
    )


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")


def validate_report(report: dict) -> None:
    """Assert the report's key layout; raises ValueError on any deviation."""
    def need(cond: bool, msg: str) -> None:
        if not cond:
            raise ValueError(f"invalid report: {msg}")

    need(report.get("schema") == REPORT_SCHEMA, f"schema != {REPORT_SCHEMA}")
    need(report.get("mode") in ("simulate", "oracle"), "bad mode")
    need(isinstance(report.get("config"), dict), "missing config echo")
    need(set(report.get("pairs", {})) == {"ab", "ab_prime", "aprime_b", "aprime_bprime"},
         "pairs must cover the four setting pairs")
    for key, block in report["pairs"].items():
        need(isinstance(block.get("oracle"), dict), f"pair {key} missing oracle prediction")
        need("correlator" in block["oracle"], f"pair {key} oracle missing correlator")
        need("probabilities" in block["oracle"], f"pair {key} oracle missing probabilities")
        if report["mode"] == "simulate":
            need(isinstance(block.get("counts"), dict), f"pair {key} missing counts")
            need(isinstance(block.get("probabilities"), dict), f"pair {key} missing probabilities")
            need(isinstance(block.get("correlator_from_cells"), dict), f"pair {key} missing correlator")
    c = report.get("chsh")
    need(isinstance(c, dict), "missing chsh block")
    for field in ("s", "se", "oracle_s", "exceeds_2", "significance_sigma", "closure_applies"):
        need(field in c, f"chsh block missing {field}")
    if report["mode"] == "simulate":
        need(isinstance(c["s"], float), "simulate report must carry an S estimate")
