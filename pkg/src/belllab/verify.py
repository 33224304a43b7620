"""The self-check property suite behind ``belllab verify``.

Each property is checked over freshly sampled configurations; every sample
carries its own derived seed so a failure message pins down a reproduction.
The suite is deliberately redundant with the test suite: it is the runtime
answer to "is this installation computing what it claims".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DeltaError, ErrorPolicy, TruncatedGaussianError, UniformError
from .estimator import correlator_from_cells, probabilities, tally
from .lhv import TWO_PI, canonical_model
from .oracle import (
    DEFAULT_QUADRATURE,
    QuadratureError,
    QuadratureSpec,
    chsh_smoothed,
    correlator_canonical,
    joint_probs_numeric,
    smoothed_joint_probs,
    smoothed_response,
    block_distributions,
)
from .protocol import PAIR_ORDER, RunPlan, SettingsQuad, TrialLog, run_sequenced
from .rng import derive_run_seed

__all__ = ["PropertyResult", "VerificationSummary", "run_verification"]

_OFFSET_LIMIT = 0.75  # keep sampled supports clear of the pi/4 ≈ 0.7854 bound


@dataclass
class PropertyResult:
    name: str
    checked: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


@dataclass
class VerificationSummary:
    seed: int
    samples: int
    results: list[PropertyResult]

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.results)

    def lines(self) -> list[str]:
        out = []
        for r in self.results:
            status = "ok" if r.ok else "FAIL"
            out.append(f"{r.name}: {r.checked} checked, {len(r.failures)} failed [{status}]")
            out.extend(f"  {f}" for f in r.failures[:5])
        verdict = "all properties hold" if self.passed else "PROPERTY FAILURE"
        out.append(f"verify: {verdict} (seed={self.seed}, samples={self.samples})")
        return out


def _rng_for(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(derive_run_seed(seed, f"verify:{name}"))


def _random_quad(rng: np.random.Generator) -> SettingsQuad:
    a, ap, b, bp = rng.uniform(0.0, TWO_PI, size=4)
    return SettingsQuad(theta_a=a, theta_a_prime=ap, theta_b=b, theta_b_prime=bp)


def _random_dist(rng: np.random.Generator):
    kind = int(rng.integers(3))
    if kind == 0:
        return DeltaError(offset=float(rng.uniform(-_OFFSET_LIMIT, _OFFSET_LIMIT)))
    if kind == 1:
        halfwidth = float(rng.uniform(0.02, 0.3))
        center = float(rng.uniform(-(_OFFSET_LIMIT - halfwidth), _OFFSET_LIMIT - halfwidth))
        return UniformError(center=center, halfwidth=halfwidth)
    bound = float(rng.uniform(0.05, 0.3))
    mean = float(rng.uniform(-(_OFFSET_LIMIT - bound), _OFFSET_LIMIT - bound))
    sd = float(rng.uniform(0.3, 1.5)) * bound
    return TruncatedGaussianError(mean=mean, sd=sd, bound=bound)


def _random_setting_local(rng: np.random.Generator) -> ErrorPolicy:
    return ErrorPolicy.setting_local(
        a=_random_dist(rng), a_prime=_random_dist(rng),
        b=_random_dist(rng), b_prime=_random_dist(rng),
    )


def _oracle_s(quad: SettingsQuad) -> float:
    e_ab = correlator_canonical(quad.theta_a, quad.theta_b)
    e_ab_p = correlator_canonical(quad.theta_a, quad.theta_b_prime)
    e_ap_b = correlator_canonical(quad.theta_a_prime, quad.theta_b)
    e_ap_bp = correlator_canonical(quad.theta_a_prime, quad.theta_b_prime)
    return abs(e_ab + e_ap_b) + abs(e_ab_p - e_ap_bp)


def _check_normalization(seed: int, samples: int, spec: QuadratureSpec) -> PropertyResult:
    result = PropertyResult("density-normalization")
    model = canonical_model()

    nodes = (np.arange(4096) + 0.5) * (TWO_PI / 4096)
    mass = float(np.sum(model.density(nodes)) * (TWO_PI / 4096))
    result.checked += 1
    if abs(mass - 1.0) > 1e-9:
        result.failures.append(f"density integral = {mass!r} (seed n/a)")

    rng = _rng_for(seed, "normalization")
    for i in range(samples):
        ta, tb = rng.uniform(0.0, TWO_PI, size=2)
        result.checked += 1
        try:
            cells = joint_probs_numeric(model, ta, tb, spec).cells()
        except QuadratureError as exc:
            result.failures.append(f"sample {i}: {exc}")
            continue
        if abs(sum(cells) - 1.0) > 1e-9:
            result.failures.append(f"sample {i}: cells sum to {sum(cells)!r}")
    return result


def _check_chsh_bound(seed: int, samples: int) -> PropertyResult:
    result = PropertyResult("chsh-bound-oracle")
    rng = _rng_for(seed, "chsh-bound")
    for i in range(10 * samples):
        quad = _random_quad(rng)
        s = _oracle_s(quad)
        result.checked += 1
        if s > 2.0 + 1e-12:
            result.failures.append(f"sample {i}: S = {s!r} at {quad}")
    return result


def _check_q_range(seed: int, samples: int, spec: QuadratureSpec) -> PropertyResult:
    result = PropertyResult("q-range")
    model = canonical_model()
    rng = _rng_for(seed, "q-range")
    lam = np.linspace(0.0, TWO_PI, 513, endpoint=False)
    for i in range(samples):
        dist = _random_dist(rng)
        nominal = float(rng.uniform(0.0, TWO_PI))
        response = model.response_a if rng.integers(2) == 0 else model.response_b
        q_raw = smoothed_response(response, nominal, dist, spec).q_raw(lam)
        result.checked += 1
        low, high = float(np.min(q_raw)), float(np.max(q_raw))
        if low < -1e-9 or high > 1.0 + 1e-9:
            result.failures.append(f"sample {i}: q range [{low!r}, {high!r}] for {dist}")
    return result


def _check_closure(seed: int, samples: int, spec: QuadratureSpec) -> PropertyResult:
    result = PropertyResult("closure-smoothed")
    model = canonical_model()
    rng = _rng_for(seed, "closure")
    for i in range(samples):
        quad = _random_quad(rng)
        policy = _random_setting_local(rng)
        s = chsh_smoothed(model, quad, policy, spec)
        result.checked += 1
        if s > 2.0 + 1e-6:
            result.failures.append(f"sample {i}: smoothed S = {s!r}")
    return result


def _check_oracle_vs_mc(
    seed: int,
    samples: int,
    spec: QuadratureSpec,
    records_filter: Callable[[TrialLog], TrialLog] | None,
) -> PropertyResult:
    result = PropertyResult("oracle-vs-mc")
    model = canonical_model()
    rng = _rng_for(seed, "oracle-mc")
    configs = max(1, samples // 20)
    for i in range(configs):
        quad = _random_quad(rng)
        policy = _random_setting_local(rng)
        run_seed = derive_run_seed(seed, f"verify:oracle-mc:{i}")
        plan = RunPlan(
            protocol_kind="sequenced", quad=quad, policy=policy,
            seed=run_seed, trials_per_pair=20_000,
        )
        log = run_sequenced(model, plan)
        if records_filter is not None:
            log = records_filter(log)
        counts = tally(log)
        for pair in PAIR_ORDER:
            est = correlator_from_cells(probabilities(counts[pair]))
            dist_a, dist_b = block_distributions(policy, pair)
            expected = correlator_from_cells(
                smoothed_joint_probs(
                    model,
                    quad.angle("A", pair.a_choice), dist_a,
                    quad.angle("B", pair.b_choice), dist_b,
                    spec,
                )
            ).value
            result.checked += 1
            se = max(est.se, 1e-12)
            z = abs(est.value - expected) / se
            if z > 4.0:
                result.failures.append(
                    f"config {i} (run seed {run_seed}), pair {pair.code}: "
                    f"E = {est.value:.5f} vs oracle {expected:.5f} ({z:.1f}σ)"
                )
    return result


def run_verification(
    seed: int = 0,
    samples: int = 100,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    records_filter: Callable[[TrialLog], TrialLog] | None = None,
) -> VerificationSummary:
    """Run the full invariant suite; ``samples`` scales every property's draw count.

    ``records_filter`` lets a test harness corrupt the simulated records
    between run and estimation — only the oracle-agreement property should
    notice.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    results = [
        _check_normalization(seed, samples, spec),
        _check_chsh_bound(seed, samples),
        _check_q_range(seed, samples, spec),
        _check_closure(seed, samples, spec),
        _check_oracle_vs_mc(seed, samples, spec, records_filter),
    ]
    return VerificationSummary(seed=seed, samples=samples, results=results)
