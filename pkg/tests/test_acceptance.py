"""Acceptance criteria, one test per criterion.

Each test prints a single PASS line (visible with ``pytest -s``) carrying the
measured values; the assertions pin the stated tolerances. Monte Carlo
criteria use fixed seeds, so the whole module is deterministic.
"""

import json
import math
import time

import numpy as np
import pytest

from belllab.cli import main as cli_main
from belllab.errors import (
    DeltaError,
    ErrorPolicy,
    SystematicErrorSchedule,
    TruncatedGaussianError,
    UniformError,
    schedule_as_policy,
)
from belllab.estimator import chsh, correlator_from_cells, correlator_from_shifted_pp, probabilities, tally
from belllab.lhv import TWO_PI, canonical_model
from belllab.oracle import (
    chsh_smoothed,
    correlator_canonical,
    joint_probs_canonical,
    joint_probs_numeric,
)
from belllab.protocol import (
    PAIR_ORDER,
    RunPlan,
    SettingsQuad,
    run_random_choice,
    run_sequenced,
)

PI = math.pi
MODEL = canonical_model()
QUAD = SettingsQuad(theta_a=PI / 2, theta_a_prime=0.0, theta_b=PI / 4, theta_b_prime=3 * PI / 4)
DEMO_SCHEDULE = SystematicErrorSchedule(*(v * PI / 2 for v in (0.018, -0.046, -0.081, -0.073)))


def _chsh_from_log(log, kind=None, seed=None):
    counts = tally(log)
    corr = {p.code: correlator_from_cells(probabilities(counts[p])) for p in PAIR_ORDER}
    return chsh(corr["ab"], corr["a'b"], corr["ab'"], corr["a'b'"],
                protocol_kind=kind, seed=seed)


@pytest.fixture(scope="module")
def zero_error_run():
    """Sequenced, zero errors, demo quad, 10^6 trials per block (criteria 1-2)."""
    plan = RunPlan("sequenced", QUAD, ErrorPolicy.zero(), seed=20_240_101,
                   trials_per_pair=1_000_000)
    t0 = time.perf_counter()
    log = run_sequenced(MODEL, plan)
    counts = tally(log)
    elapsed = time.perf_counter() - t0
    return log, counts, elapsed


def test_criterion_1_canonical_probabilities(zero_error_run):
    log, counts, elapsed = zero_error_run
    n = 1_000_000
    pair_ab = PAIR_ORDER[0]
    p_pp = counts[pair_ab].n_pp / n
    sigma = math.sqrt(0.125 * 0.875 / n)
    assert abs(p_pp - 0.125) < 4.0 * sigma  # ±0.00132
    assert elapsed < 5.0
    print(f"\n[acceptance 1] PASS — p++(π/2, π/4) = {p_pp:.5f} "
          f"(target 0.125 ± {4 * sigma:.5f}), run+tally {elapsed:.2f}s < 5s")


def test_criterion_2_canonical_correlator(zero_error_run):
    log, counts, _ = zero_error_run
    assert correlator_canonical(PI / 2, PI / 4) == -0.5
    assert correlator_canonical(0.0, 3 * PI / 4) == 0.5
    e_ab = correlator_from_cells(probabilities(counts[PAIR_ORDER[0]]))
    e_apbp = correlator_from_cells(probabilities(counts[PAIR_ORDER[3]]))
    assert abs(e_ab.value - (-0.5)) < 4.0 * e_ab.se
    assert abs(e_apbp.value - 0.5) < 4.0 * e_apbp.se
    print(f"[acceptance 2] PASS — oracle E exactly ∓0.5; MC E(a,b) = {e_ab.value:+.5f} "
          f"± {e_ab.se:.5f}, E(a',b') = {e_apbp.value:+.5f} ± {e_apbp.se:.5f}")


def test_criterion_3_no_error_chsh_bound():
    rng = np.random.default_rng(3003)
    worst_oracle = 0.0
    for _ in range(1000):
        quad = SettingsQuad(*rng.uniform(0.0, TWO_PI, size=4))
        e = [
            correlator_canonical(quad.theta_a, quad.theta_b),
            correlator_canonical(quad.theta_a_prime, quad.theta_b),
            correlator_canonical(quad.theta_a, quad.theta_b_prime),
            correlator_canonical(quad.theta_a_prime, quad.theta_b_prime),
        ]
        s = abs(e[0] + e[1]) + abs(e[2] - e[3])
        worst_oracle = max(worst_oracle, s)
        assert s <= 2.0 + 1e-12

    worst_mc = -10.0
    for i in range(50):
        quad = SettingsQuad(*rng.uniform(0.0, TWO_PI, size=4))
        plan = RunPlan("sequenced", quad, ErrorPolicy.zero(), seed=5000 + i,
                       trials_per_pair=20_000)
        rep = _chsh_from_log(run_sequenced(MODEL, plan))
        margin = (rep.s - 2.0) / rep.s_se
        worst_mc = max(worst_mc, margin)
        assert rep.s <= 2.0 + 4.0 * rep.s_se
    print(f"[acceptance 3] PASS — 1000 oracle quads max S = {worst_oracle:.12f} ≤ 2+1e-12; "
          f"50 MC quads worst margin {worst_mc:+.2f}σ ≤ +4σ")


def test_criterion_4_loophole_reproduction():
    t0 = time.perf_counter()
    plan = RunPlan("sequenced", QUAD, schedule_as_policy(DEMO_SCHEDULE),
                   seed=20_080_213, trials_per_pair=1_000_000)
    rep = _chsh_from_log(run_sequenced(MODEL, plan))
    elapsed = time.perf_counter() - t0
    assert abs(rep.s - 2.072) < 4.0 * rep.s_se
    significance = (rep.s - 2.0) / rep.s_se
    assert significance >= 5.0
    assert elapsed < 30.0
    print(f"[acceptance 4] PASS — S' = {rep.s:.4f} ± {rep.s_se:.4f} "
          f"(target 2.072 ± {4 * rep.s_se:.4f}), exceeds 2 by {significance:.1f}σ ≥ 5σ, "
          f"{elapsed:.2f}s < 30s")


def test_criterion_5_equal_error_closure():
    from belllab.oracle import sprime_systematic

    sched = SystematicErrorSchedule(alpha=0.05, beta=0.05, gamma=-0.05, delta=-0.05)
    s_oracle = sprime_systematic(QUAD, sched)
    assert s_oracle <= 2.0 + 1e-12
    assert s_oracle == pytest.approx(2.0, abs=1e-12)

    plan = RunPlan("sequenced", QUAD, schedule_as_policy(sched), seed=20_240_505,
                   trials_per_pair=1_000_000)
    rep = _chsh_from_log(run_sequenced(MODEL, plan))
    assert rep.s <= 2.0 + 4.0 * rep.s_se
    print(f"[acceptance 5] PASS — α=β, γ=δ: oracle S' = {s_oracle:.12f} ≤ 2; "
          f"MC S' = {rep.s:.4f} ± {rep.s_se:.4f} ≤ 2 + 4σ")


def _random_setting_local(rng):
    def dist():
        k = rng.integers(3)
        if k == 0:
            return DeltaError(float(rng.uniform(-0.7, 0.7)))
        if k == 1:
            h = float(rng.uniform(0.02, 0.3))
            return UniformError(center=float(rng.uniform(-(0.75 - h), 0.75 - h)), halfwidth=h)
        b = float(rng.uniform(0.05, 0.3))
        return TruncatedGaussianError(
            mean=float(rng.uniform(-(0.75 - b), 0.75 - b)),
            sd=b * float(rng.uniform(0.3, 1.5)), bound=b,
        )

    return ErrorPolicy.setting_local(a=dist(), a_prime=dist(), b=dist(), b_prime=dist())


def test_criterion_6_theorem_level_closure():
    rng = np.random.default_rng(6006)
    configs = []
    worst = 0.0
    for _ in range(100):
        quad = SettingsQuad(*rng.uniform(0.0, TWO_PI, size=4))
        policy = _random_setting_local(rng)
        s = chsh_smoothed(MODEL, quad, policy)
        worst = max(worst, s)
        assert s <= 2.0 + 1e-6
        configs.append((quad, policy, s))

    worst_z = 0.0
    for i, (quad, policy, s_oracle) in enumerate(configs[:10]):
        plan = RunPlan("random_choice", quad, policy, seed=60_000 + i, total_trials=400_000)
        rep = _chsh_from_log(run_random_choice(MODEL, plan))
        z = abs(rep.s - s_oracle) / rep.s_se
        worst_z = max(worst_z, z)
        assert z <= 4.0
    print(f"[acceptance 6] PASS — 100 smoothed configs max S = {worst:.8f} ≤ 2+1e-6; "
          f"10 random-choice MC runs worst |Δ| = {worst_z:.2f}σ ≤ 4σ")


def test_criterion_7_oracle_consistency():
    rng = np.random.default_rng(7007)
    worst = 0.0
    for _ in range(200):
        ta, tb = rng.uniform(0.0, TWO_PI, size=2)
        got = joint_probs_numeric(MODEL, ta, tb).cells()
        want = joint_probs_canonical(ta, tb).cells()
        worst = max(worst, max(abs(g - w) for g, w in zip(got, want)))
    assert worst < 1e-9
    print(f"[acceptance 7] PASS — numeric vs closed-form cells, 200 pairs, "
          f"max |Δ| = {worst:.2e} < 1e-9")


def test_criterion_8_shifted_settings_equivalence():
    rng = np.random.default_rng(8008)
    worst = 0.0
    for _ in range(100):
        ta, tb = rng.uniform(0.0, TWO_PI, size=2)
        inputs = [
            (joint_probs_numeric(MODEL, ta + da, tb + db).p_pp, 0.0)
            for da, db in ((0.0, 0.0), (PI, PI), (0.0, PI), (PI, 0.0))
        ]
        e10 = correlator_from_shifted_pp(inputs).value
        e7 = correlator_from_cells(joint_probs_canonical(ta, tb)).value
        worst = max(worst, abs(e10 - e7))
    assert worst < 1e-9
    print(f"[acceptance 8] PASS — shifted-settings vs direct correlator, 100 pairs, "
          f"max |Δ| = {worst:.2e} < 1e-9")


def test_criterion_9_determinism(tmp_path):
    cfg = {
        "angles": {"theta_a": PI / 2, "theta_a_prime": 0.0, "theta_b": PI / 4,
                   "theta_b_prime": 3 * PI / 4},
        "protocol": {"kind": "sequenced", "trials_per_pair": 100_000, "seed": 909},
        "errors": {"schedule": {"alpha": DEMO_SCHEDULE.alpha, "beta": DEMO_SCHEDULE.beta,
                                "gamma": DEMO_SCHEDULE.gamma, "delta": DEMO_SCHEDULE.delta}},
    }
    cfg_path = tmp_path / "cfg.json"
    out = tmp_path / "report.json"
    log = tmp_path / "trials.csv"
    cfg_path.write_text(json.dumps(cfg))
    args = ["simulate", "--config", str(cfg_path), "--out", str(out), "--trial-log", str(log)]

    assert cli_main(args + ["--workers", "1"]) == 0
    report_w1, log_w1 = out.read_bytes(), log.read_bytes()
    assert cli_main(args + ["--workers", "8"]) == 0
    assert out.read_bytes() == report_w1
    assert log.read_bytes() == log_w1
    assert cli_main(args + ["--workers", "1"]) == 0  # plain repeat
    assert out.read_bytes() == report_w1

    # random-choice protocol under the same contract
    cfg["protocol"] = {"kind": "random_choice", "total_trials": 100_000, "seed": 909}
    cfg["errors"] = {"mode": "setting_local", "distributions": {
        "b": {"kind": "uniform", "center": 0.0, "halfwidth": 0.2}}}
    cfg_path.write_text(json.dumps(cfg))
    assert cli_main(args + ["--workers", "1"]) == 0
    report_rc, log_rc = out.read_bytes(), log.read_bytes()
    assert cli_main(args + ["--workers", "8"]) == 0
    assert out.read_bytes() == report_rc
    assert log.read_bytes() == log_rc
    print("[acceptance 9] PASS — identical trial logs and reports at 1 and 8 workers "
          "(sequenced and random-choice)")
