"""Rotation-angle error models.

Two pictures coexist. A ``SystematicErrorSchedule`` holds one fixed offset per
sequenced measurement block — the configuration that opens the loophole. An
``ErrorPolicy`` maps measurement contexts to error *distributions*, with point
masses as the degenerate case; its ``setting_local`` mode structurally cannot
make a party's error depend on the partner's setting, which is the sufficient
condition for the bound S' <= 2 to survive.

All supports must lie strictly inside (−π/4, π/4); violations are rejected at
construction time rather than at draw time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Mapping

import numpy as np

from .rng import TrialStream, trial_keys, uniforms_at

__all__ = [
    "ERROR_BOUND",
    "DeltaError",
    "ErrorDistribution",
    "ErrorPolicy",
    "PolicyLookupError",
    "SystematicErrorSchedule",
    "TruncatedGaussianError",
    "UniformError",
    "draw_error",
    "schedule_as_policy",
]

ERROR_BOUND = math.pi / 4.0

Side = Literal["A", "B"]
SettingName = Literal["primary", "alternate"]

_SIDES = ("A", "B")
_SETTINGS = ("primary", "alternate")

_erf = np.vectorize(math.erf)


class PolicyLookupError(KeyError):
    """A context-dependent policy has no distribution for the requested context."""


def _check_support(lo: float, hi: float, what: str) -> None:
    if not (-ERROR_BOUND < lo <= hi < ERROR_BOUND):
        raise ValueError(
            f"{what}: support [{lo:.6g}, {hi:.6g}] must lie strictly inside "
            f"(-pi/4, pi/4) = (±{ERROR_BOUND:.6g})"
        )


@dataclass(frozen=True)
class ErrorDistribution:
    """Base for rotation-error distributions. Subclasses are frozen value types."""

    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def sample(self, stream: TrialStream) -> float:
        raise NotImplementedError

    def sample_batch(self, seed: int, role: str, indices: np.ndarray) -> np.ndarray:
        """Vectorized draws; trial ``indices`` select the per-trial substreams.

        Must consume draw counters exactly as ``sample`` does so that the
        sequential and batched paths produce identical values.
        """
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(data: Mapping) -> "ErrorDistribution":
        kind = data.get("kind")
        if kind == "delta":
            return DeltaError(offset=float(data["offset"]))
        if kind == "uniform":
            return UniformError(center=float(data["center"]), halfwidth=float(data["halfwidth"]))
        if kind == "truncated_gaussian":
            return TruncatedGaussianError(
                mean=float(data["mean"]), sd=float(data["sd"]), bound=float(data["bound"])
            )
        raise ValueError(f"unknown error-distribution kind {kind!r}")


@dataclass(frozen=True)
class DeltaError(ErrorDistribution):
    """Point mass: the draw always equals ``offset``. Consumes no randomness."""

    offset: float

    def __post_init__(self) -> None:
        _check_support(self.offset, self.offset, "delta error")

    def support(self) -> tuple[float, float]:
        return (self.offset, self.offset)

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= self.offset, 1.0, 0.0)

    def sample(self, stream: TrialStream) -> float:
        return self.offset

    def sample_batch(self, seed, role, indices):
        return np.full(np.asarray(indices).shape, self.offset, dtype=float)

    def to_dict(self) -> dict:
        return {"kind": "delta", "offset": self.offset}


@dataclass(frozen=True)
class UniformError(ErrorDistribution):
    """Uniform on [center − halfwidth, center + halfwidth]. One draw per sample."""

    center: float
    halfwidth: float

    def __post_init__(self) -> None:
        if self.halfwidth <= 0:
            raise ValueError("uniform error: halfwidth must be positive (use delta for a point)")
        _check_support(self.center - self.halfwidth, self.center + self.halfwidth, "uniform error")

    def support(self) -> tuple[float, float]:
        return (self.center - self.halfwidth, self.center + self.halfwidth)

    def cdf(self, x):
        lo, hi = self.support()
        return np.clip((np.asarray(x, dtype=float) - lo) / (hi - lo), 0.0, 1.0)

    def sample(self, stream: TrialStream) -> float:
        return self.center + (2.0 * stream.next_uniform() - 1.0) * self.halfwidth

    def sample_batch(self, seed, role, indices):
        u = uniforms_at(trial_keys(seed, role, indices), 0)
        return self.center + (2.0 * u - 1.0) * self.halfwidth

    def to_dict(self) -> dict:
        return {"kind": "uniform", "center": self.center, "halfwidth": self.halfwidth}


@dataclass(frozen=True)
class TruncatedGaussianError(ErrorDistribution):
    """Gaussian(mean, sd) conditioned on |x − mean| ≤ bound, renormalized.

    Sampling rejects draws from the untruncated Gaussian — exact, and cheap
    as long as ``bound`` is not tiny compared to ``sd``. Each candidate uses
    two uniforms (one Box-Muller normal).
    """

    mean: float
    sd: float
    bound: float

    _MAX_ROUNDS = 1000

    def __post_init__(self) -> None:
        if self.sd <= 0:
            raise ValueError("truncated gaussian error: sd must be positive")
        if self.bound <= 0:
            raise ValueError("truncated gaussian error: bound must be positive")
        _check_support(self.mean - self.bound, self.mean + self.bound, "truncated gaussian error")

    def support(self) -> tuple[float, float]:
        return (self.mean - self.bound, self.mean + self.bound)

    def cdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / (self.sd * math.sqrt(2.0))
        zb = self.bound / (self.sd * math.sqrt(2.0))
        raw = (_erf(z) - _erf(-zb)) / (_erf(zb) - _erf(-zb))
        return np.clip(raw, 0.0, 1.0)

    @staticmethod
    def _normal(u1, u2):
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)

    def sample(self, stream: TrialStream) -> float:
        for _ in range(self._MAX_ROUNDS):
            u1, u2 = stream.next_uniform(), stream.next_uniform()
            x = self.mean + self.sd * float(self._normal(u1, u2))
            if abs(x - self.mean) <= self.bound:
                return x
        raise RuntimeError("truncated gaussian rejection failed to accept; check sd vs bound")

    def sample_batch(self, seed, role, indices):
        idx = np.asarray(indices, dtype=np.uint64)
        keys = trial_keys(seed, role, idx)
        out = np.empty(idx.shape, dtype=float)
        pending = np.arange(idx.size)
        for round_no in range(self._MAX_ROUNDS):
            u1 = uniforms_at(keys[pending], 2 * round_no)
            u2 = uniforms_at(keys[pending], 2 * round_no + 1)
            cand = self.mean + self.sd * self._normal(u1, u2)
            ok = np.abs(cand - self.mean) <= self.bound
            out[pending[ok]] = cand[ok]
            pending = pending[~ok]
            if pending.size == 0:
                return out
        raise RuntimeError("truncated gaussian rejection failed to accept; check sd vs bound")

    def to_dict(self) -> dict:
        return {"kind": "truncated_gaussian", "mean": self.mean, "sd": self.sd, "bound": self.bound}


@dataclass(frozen=True)
class SystematicErrorSchedule:
    """Fixed per-block offsets for the sequenced protocol.

    ``alpha``..``delta`` are Bob's offsets in block order (a,b), (a,b'),
    (a',b), (a',b'); the ``alice_*`` quadruple covers Alice's rotations in the
    same blocks and defaults to zero.
    """

    alpha: float
    beta: float
    gamma: float
    delta: float
    alice_alpha: float = 0.0
    alice_beta: float = 0.0
    alice_gamma: float = 0.0
    alice_delta: float = 0.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "delta",
                     "alice_alpha", "alice_beta", "alice_gamma", "alice_delta"):
            value = getattr(self, name)
            if not abs(value) < ERROR_BOUND:
                raise ValueError(f"schedule offset {name}={value:.6g} must satisfy |x| < pi/4")

    def bob_offsets(self) -> tuple[float, float, float, float]:
        return (self.alpha, self.beta, self.gamma, self.delta)

    def alice_offsets(self) -> tuple[float, float, float, float]:
        return (self.alice_alpha, self.alice_beta, self.alice_gamma, self.alice_delta)


def _validate_key(key: tuple, contextual: bool) -> None:
    side, own = key[0], key[1]
    if side not in _SIDES or own not in _SETTINGS:
        raise ValueError(f"bad policy key {key!r}")
    if contextual:
        if len(key) != 3 or key[2] not in _SETTINGS:
            raise ValueError(f"bad context policy key {key!r}")
    elif len(key) != 2:
        raise ValueError(f"bad setting-local policy key {key!r}")


@dataclass(frozen=True)
class ErrorPolicy:
    """Error distributions keyed by measurement context.

    ``setting_local`` tables are keyed by (side, own_setting) — four entries,
    always total, and by construction blind to the partner's choice.
    ``context_dependent`` tables are keyed by (side, own_setting,
    partner_setting); lookups of missing contexts raise ``PolicyLookupError``.
    """

    mode: Literal["setting_local", "context_dependent"]
    table: Mapping[tuple, ErrorDistribution]

    def __post_init__(self) -> None:
        if self.mode not in ("setting_local", "context_dependent"):
            raise ValueError(f"unknown policy mode {self.mode!r}")
        contextual = self.mode == "context_dependent"
        for key, dist in self.table.items():
            _validate_key(key, contextual)
            if not isinstance(dist, ErrorDistribution):
                raise ValueError(f"policy entry {key!r} is not an ErrorDistribution")
        if not contextual:
            missing = [
                (s, o) for s in _SIDES for o in _SETTINGS if (s, o) not in self.table
            ]
            if missing:
                raise ValueError(f"setting_local policy missing entries for {missing}")

    @classmethod
    def setting_local(
        cls,
        a: ErrorDistribution | None = None,
        a_prime: ErrorDistribution | None = None,
        b: ErrorDistribution | None = None,
        b_prime: ErrorDistribution | None = None,
    ) -> "ErrorPolicy":
        zero = DeltaError(0.0)
        return cls(
            mode="setting_local",
            table={
                ("A", "primary"): a or zero,
                ("A", "alternate"): a_prime or zero,
                ("B", "primary"): b or zero,
                ("B", "alternate"): b_prime or zero,
            },
        )

    @classmethod
    def context_dependent(cls, table: Mapping[tuple, ErrorDistribution]) -> "ErrorPolicy":
        return cls(mode="context_dependent", table=dict(table))

    @classmethod
    def zero(cls) -> "ErrorPolicy":
        return cls.setting_local()

    def distribution(self, side: Side, own: SettingName, partner: SettingName) -> ErrorDistribution:
        if side not in _SIDES or own not in _SETTINGS or partner not in _SETTINGS:
            raise ValueError(f"bad context ({side!r}, {own!r}, {partner!r})")
        if self.mode == "setting_local":
            return self.table[(side, own)]
        try:
            return self.table[(side, own, partner)]
        except KeyError:
            raise PolicyLookupError(
                f"context-dependent policy has no entry for side={side}, "
                f"own={own}, partner={partner}"
            ) from None

    def as_setting_local(self) -> "ErrorPolicy":
        """Re-express this policy with one distribution per (side, own setting).

        Succeeds only when every context pair agrees for both partner
        settings — i.e. the errors genuinely do not depend on the partner.
        """
        if self.mode == "setting_local":
            return self
        collapsed: dict[tuple, ErrorDistribution] = {}
        for side in _SIDES:
            for own in _SETTINGS:
                dists = [self.distribution(side, own, partner) for partner in _SETTINGS]
                if dists[0] != dists[1]:
                    raise ValueError(
                        f"policy is genuinely context-dependent: side={side}, own={own} "
                        f"has {dists[0]} vs {dists[1]} depending on the partner setting"
                    )
                collapsed[(side, own)] = dists[0]
        return ErrorPolicy(mode="setting_local", table=collapsed)

    def to_dict(self) -> dict:
        def name(side: str, setting: str) -> str:
            base = "a" if side == "A" else "b"
            return base if setting == "primary" else base + "_prime"

        if self.mode == "setting_local":
            dists = {name(s, o): self.table[(s, o)].to_dict() for (s, o) in self.table}
        else:
            dists = {
                f"{name(s, o)}|{name('B' if s == 'A' else 'A', p)}": d.to_dict()
                for (s, o, p), d in self.table.items()
            }
        return {"mode": self.mode, "distributions": dists}


def draw_error(
    policy: ErrorPolicy,
    side: Side,
    own_setting: SettingName,
    partner_setting: SettingName,
    stream: TrialStream,
) -> float:
    """One rotation-error draw for the given measurement context."""
    return policy.distribution(side, own_setting, partner_setting).sample(stream)


def schedule_as_policy(schedule: SystematicErrorSchedule) -> ErrorPolicy:
    """The context-dependent point-mass policy reproducing a block schedule.

    Block order (a,b), (a,b'), (a',b), (a',b') maps to contexts
    (own, partner) = (primary, primary), (alternate, primary),
    (primary, alternate), (alternate, alternate) for Bob, and with own/partner
    swapped for Alice.
    """
    bob = schedule.bob_offsets()
    alice = schedule.alice_offsets()
    table = {
        ("B", "primary", "primary"): DeltaError(bob[0]),
        ("B", "alternate", "primary"): DeltaError(bob[1]),
        ("B", "primary", "alternate"): DeltaError(bob[2]),
        ("B", "alternate", "alternate"): DeltaError(bob[3]),
        ("A", "primary", "primary"): DeltaError(alice[0]),
        ("A", "primary", "alternate"): DeltaError(alice[1]),
        ("A", "alternate", "primary"): DeltaError(alice[2]),
        ("A", "alternate", "alternate"): DeltaError(alice[3]),
    }
    return ErrorPolicy.context_dependent(table)
