"""Trial-by-trial experiment execution.

Two protocols produce the same kind of record stream. The *sequenced* protocol
runs four fixed-setting blocks in order (a,b), (a,b'), (a',b), (a',b') — each
block's rotation errors are drawn for that block's context, which is what lets
context-dependent offsets fake a CHSH violation. The *random-choice* protocol
flips an independent fair coin per party on every trial, so a party's error
context can never encode the partner's setting.

All per-trial randomness comes from counter-based substreams keyed by
(seed, role, trial index): runs are reproducible, and chunking trials across
workers cannot change a single bit of the output.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Literal

import numpy as np

from .errors import ErrorPolicy
from .lhv import LhvModel, normalize_angle
from .rng import derive_substream, trial_keys, uniforms_at

__all__ = [
    "PAIR_ORDER",
    "RunPlan",
    "SettingPair",
    "SettingsQuad",
    "TrialLog",
    "TrialRecord",
    "derive_substream",
    "run_pair",
    "run_random_choice",
    "run_sequenced",
]

_SETTINGS = ("primary", "alternate")


@dataclass(frozen=True)
class SettingsQuad:
    """The four nominal rotation angles; stored normalized to [0, 2π)."""

    theta_a: float
    theta_a_prime: float
    theta_b: float
    theta_b_prime: float

    def __post_init__(self) -> None:
        for name in ("theta_a", "theta_a_prime", "theta_b", "theta_b_prime"):
            object.__setattr__(self, name, float(normalize_angle(getattr(self, name))))

    def angle(self, side: str, setting: str) -> float:
        if side == "A":
            return self.theta_a if setting == "primary" else self.theta_a_prime
        return self.theta_b if setting == "primary" else self.theta_b_prime


@dataclass(frozen=True)
class SettingPair:
    """One of the four joint setting choices."""

    a_choice: Literal["primary", "alternate"]
    b_choice: Literal["primary", "alternate"]

    def __post_init__(self) -> None:
        if self.a_choice not in _SETTINGS or self.b_choice not in _SETTINGS:
            raise ValueError(f"bad setting pair ({self.a_choice!r}, {self.b_choice!r})")

    @property
    def code(self) -> str:
        return ("a" if self.a_choice == "primary" else "a'") + (
            "b" if self.b_choice == "primary" else "b'"
        )

    @property
    def block_index(self) -> int:
        return 2 * (self.a_choice == "alternate") + (self.b_choice == "alternate")


PAIR_ORDER = (
    SettingPair("primary", "primary"),
    SettingPair("primary", "alternate"),
    SettingPair("alternate", "primary"),
    SettingPair("alternate", "alternate"),
)

_CODE_TO_PAIR = {p.code: p for p in PAIR_ORDER}


@dataclass(frozen=True)
class TrialRecord:
    index: int
    pair: SettingPair
    realized_angle_a: float
    realized_angle_b: float
    outcome_a: int
    outcome_b: int


@dataclass
class TrialLog:
    """Array-backed sequence of trial records (indexing yields TrialRecord)."""

    index: np.ndarray
    a_alt: np.ndarray
    b_alt: np.ndarray
    realized_a: np.ndarray
    realized_b: np.ndarray
    outcome_a: np.ndarray
    outcome_b: np.ndarray

    def __len__(self) -> int:
        return self.index.size

    def __getitem__(self, i: int) -> TrialRecord:
        return TrialRecord(
            index=int(self.index[i]),
            pair=PAIR_ORDER[2 * int(self.a_alt[i]) + int(self.b_alt[i])],
            realized_angle_a=float(self.realized_a[i]),
            realized_angle_b=float(self.realized_b[i]),
            outcome_a=int(self.outcome_a[i]),
            outcome_b=int(self.outcome_b[i]),
        )

    def __iter__(self) -> Iterator[TrialRecord]:
        for i in range(len(self)):
            yield self[i]

    def pair_ids(self) -> np.ndarray:
        return 2 * self.a_alt.astype(np.intp) + self.b_alt.astype(np.intp)

    def write_csv(self, path: str | Path) -> None:
        """One record per line: index, pair code, realized angles (full double
        precision decimal), outcomes. Vectorized formatting: trial logs run to
        millions of lines."""
        codes = np.array([p.code for p in PAIR_ORDER])[self.pair_ids()]
        comma = np.full(len(self), ",")
        line = np.char.mod("%d", self.index.astype(np.int64))
        for col in (
            codes,
            np.char.mod("%.16e", self.realized_a),
            np.char.mod("%.16e", self.realized_b),
            np.char.mod("%d", self.outcome_a),
            np.char.mod("%d", self.outcome_b),
        ):
            line = np.char.add(np.char.add(line, comma), col)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# index,pair,realized_angle_a,realized_angle_b,outcome_a,outcome_b\n")
            fh.write("\n".join(line))
            fh.write("\n")

    @classmethod
    def read_csv(cls, path: str | Path) -> "TrialLog":
        idx, aa, bb, ra, rb, oa, ob = [], [], [], [], [], [], []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                f_idx, code, f_ra, f_rb, f_oa, f_ob = line.split(",")
                pair = _CODE_TO_PAIR[code]
                idx.append(int(f_idx))
                aa.append(pair.a_choice == "alternate")
                bb.append(pair.b_choice == "alternate")
                ra.append(float(f_ra))
                rb.append(float(f_rb))
                oa.append(int(f_oa))
                ob.append(int(f_ob))
        return cls(
            index=np.asarray(idx, dtype=np.uint64),
            a_alt=np.asarray(aa, dtype=np.uint8),
            b_alt=np.asarray(bb, dtype=np.uint8),
            realized_a=np.asarray(ra, dtype=float),
            realized_b=np.asarray(rb, dtype=float),
            outcome_a=np.asarray(oa, dtype=np.uint8),
            outcome_b=np.asarray(ob, dtype=np.uint8),
        )


@dataclass(frozen=True)
class RunPlan:
    """Everything that determines a run's records (worker count deliberately
    excluded: execution layout must not affect results)."""

    protocol_kind: Literal["sequenced", "random_choice"]
    quad: SettingsQuad
    policy: ErrorPolicy
    seed: int
    trials_per_pair: int | None = None
    total_trials: int | None = None

    def __post_init__(self) -> None:
        if self.protocol_kind == "sequenced":
            if not self.trials_per_pair or self.trials_per_pair < 1:
                raise ValueError("sequenced plan requires trials_per_pair >= 1")
        elif self.protocol_kind == "random_choice":
            if not self.total_trials or self.total_trials < 1:
                raise ValueError("random_choice plan requires total_trials >= 1")
        else:
            raise ValueError(f"unknown protocol kind {self.protocol_kind!r}")


def _sample_errors(policy, side, role, seed, indices, own_alt, partner_alt):
    """Per-trial error draws; contexts are resolved per trial, streams per index."""
    out = np.zeros(indices.size, dtype=float)
    for own in (0, 1):
        for partner in (0, 1):
            mask = (own_alt == own) & (partner_alt == partner)
            if not mask.any():
                continue
            dist = policy.distribution(side, _SETTINGS[own], _SETTINGS[partner])
            out[mask] = dist.sample_batch(seed, role, indices[mask])
    return out


def _evaluate_trials(model, policy, seed, indices, a_alt, b_alt, nominal_a, nominal_b):
    """Evaluate a batch of trials. Pure in (seed, index): chunk-invariant.

    ``nominal_a``/``nominal_b`` are per-trial nominal angles (already resolved
    from the setting choices). Outcome evaluation is local by construction:
    each response call sees only λ and that side's realized angle.
    """
    lam = normalize_angle(model.lambda_ppf(uniforms_at(trial_keys(seed, "lambda", indices), 0)))
    err_a = _sample_errors(policy, "A", "alice_error", seed, indices, a_alt, b_alt)
    err_b = _sample_errors(policy, "B", "bob_error", seed, indices, b_alt, a_alt)
    realized_a = normalize_angle(nominal_a + err_a)
    realized_b = normalize_angle(nominal_b + err_b)
    outcome_a = np.asarray(model.response_a(lam, realized_a), dtype=np.uint8)
    outcome_b = np.asarray(model.response_b(lam, realized_b), dtype=np.uint8)
    return realized_a, realized_b, outcome_a, outcome_b


def _run_indices(model, policy, quad, seed, indices, a_alt, b_alt, workers):
    nominal_a = np.where(a_alt == 0, quad.theta_a, quad.theta_a_prime)
    nominal_b = np.where(b_alt == 0, quad.theta_b, quad.theta_b_prime)

    if workers <= 1 or indices.size < 2 * workers:
        parts = [(indices, a_alt, b_alt, nominal_a, nominal_b)]
    else:
        bounds = np.linspace(0, indices.size, workers + 1, dtype=np.intp)
        parts = [
            (indices[lo:hi], a_alt[lo:hi], b_alt[lo:hi], nominal_a[lo:hi], nominal_b[lo:hi])
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]

    def work(part):
        idx, aa, bb, na, nb = part
        return _evaluate_trials(model, policy, seed, idx, aa, bb, na, nb)

    if len(parts) == 1:
        results = [work(parts[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            results = list(pool.map(work, parts))

    realized_a = np.concatenate([r[0] for r in results])
    realized_b = np.concatenate([r[1] for r in results])
    outcome_a = np.concatenate([r[2] for r in results])
    outcome_b = np.concatenate([r[3] for r in results])
    return TrialLog(
        index=indices,
        a_alt=a_alt,
        b_alt=b_alt,
        realized_a=realized_a,
        realized_b=realized_b,
        outcome_a=outcome_a,
        outcome_b=outcome_b,
    )


def run_sequenced(model: LhvModel, plan: RunPlan, workers: int = 1) -> TrialLog:
    """Four equal blocks in order (a,b), (a,b'), (a',b), (a',b')."""
    if plan.protocol_kind != "sequenced":
        raise ValueError("plan is not a sequenced plan")
    n = plan.trials_per_pair
    indices = np.arange(4 * n, dtype=np.uint64)
    block = (indices // n).astype(np.uint8)
    a_alt = (block >= 2).astype(np.uint8)
    b_alt = (block % 2).astype(np.uint8)
    return _run_indices(model, plan.policy, plan.quad, plan.seed, indices, a_alt, b_alt, workers)


def run_random_choice(model: LhvModel, plan: RunPlan, workers: int = 1) -> TrialLog:
    """Per-trial independent fair setting choices for Alice and for Bob."""
    if plan.protocol_kind != "random_choice":
        raise ValueError("plan is not a random_choice plan")
    indices = np.arange(plan.total_trials, dtype=np.uint64)
    u_a = uniforms_at(trial_keys(plan.seed, "alice_choice", indices), 0)
    u_b = uniforms_at(trial_keys(plan.seed, "bob_choice", indices), 0)
    a_alt = (u_a >= 0.5).astype(np.uint8)
    b_alt = (u_b >= 0.5).astype(np.uint8)
    return _run_indices(model, plan.policy, plan.quad, plan.seed, indices, a_alt, b_alt, workers)


def run_pair(
    model: LhvModel,
    policy: ErrorPolicy,
    pair: SettingPair,
    theta_a: float,
    theta_b: float,
    trials: int,
    seed: int,
    workers: int = 1,
) -> TrialLog:
    """A single fixed-pair block at explicit nominal angles.

    Errors are drawn for ``pair``'s context, while the nominal angles may be
    anything — this is the hook the shifted-settings estimator uses to
    measure ++ rates at displaced angle pairs.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    indices = np.arange(trials, dtype=np.uint64)
    a_alt = np.full(trials, pair.a_choice == "alternate", dtype=np.uint8)
    b_alt = np.full(trials, pair.b_choice == "alternate", dtype=np.uint8)
    quad_like = SettingsQuad(
        theta_a=theta_a if pair.a_choice == "primary" else 0.0,
        theta_a_prime=theta_a if pair.a_choice == "alternate" else 0.0,
        theta_b=theta_b if pair.b_choice == "primary" else 0.0,
        theta_b_prime=theta_b if pair.b_choice == "alternate" else 0.0,
    )
    return _run_indices(model, policy, quad_like, seed, indices, a_alt, b_alt, workers)
