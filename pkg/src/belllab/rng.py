"""Counter-based random substreams for reproducible, parallel trial evaluation.

Every random quantity in a run is a pure function of ``(seed, role, trial_index,
draw_index)``. The derivation hashes the tuple through a SplitMix64-style
avalanche mixer, so any trial's draws can be computed in isolation: chunking a
run across workers, or replaying a single trial, yields bit-identical values.

Roles partition the randomness consumed by one trial (shared hidden variable,
each party's setting choice, each party's rotation error) into statistically
independent streams.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ROLES",
    "TrialStream",
    "derive_run_seed",
    "derive_substream",
    "trial_keys",
    "uniforms_at",
]

ROLES = ("lambda", "alice_choice", "bob_choice", "alice_error", "bob_error")

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX_A = _U64(0xBF58476D1CE4E5B9)
_MIX_B = _U64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer: a bijective 64-bit avalanche mix. Wraparound is the
    point, so overflow diagnostics are suppressed."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U64(30))) * _MIX_A
        z = (z ^ (z >> _U64(27))) * _MIX_B
        return z ^ (z >> _U64(31))


def _role_key(seed: int, role: str) -> np.ndarray:
    if role not in ROLES:
        raise ValueError(f"unknown stream role {role!r}; expected one of {ROLES}")
    tag = (0xA076_1D64_78BD_642F * (ROLES.index(role) + 1)) & _MASK
    return _mix64(np.asarray(seed & _MASK, dtype=np.uint64) ^ _U64(tag))


def trial_keys(seed: int, role: str, indices: np.ndarray) -> np.ndarray:
    """Per-trial 64-bit keys; bijective in the trial index for a fixed (seed, role)."""
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64(_role_key(seed, role) + _mix64(idx + _GOLDEN))


def _to_unit(bits: np.ndarray) -> np.ndarray:
    # 53-bit mantissa, offset by half a lattice step: values lie in (0, 1).
    return ((bits >> _U64(11)).astype(np.float64) + 0.5) * (2.0**-53)


def uniforms_at(keys: np.ndarray, draw: int | np.ndarray) -> np.ndarray:
    """The ``draw``-th uniform of each keyed substream, in the open interval (0, 1)."""
    j = np.asarray(draw, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _to_unit(_mix64(np.asarray(keys, dtype=np.uint64) + (j + _U64(1)) * _GOLDEN))


def derive_run_seed(seed: int, label: str) -> int:
    """A child seed for an auxiliary run, stable in (seed, label)."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    tag = int.from_bytes(digest[:8], "little")
    return int(_mix64(np.asarray((seed ^ tag) & _MASK, dtype=np.uint64)))


@dataclass
class TrialStream:
    """Sequential view of one trial's substream.

    ``next_uniform``/``uniforms`` walk the same draw counter the vectorized
    protocol engine uses, so stream-by-stream and batched evaluation agree
    exactly.
    """

    seed: int
    role: str
    trial_index: int
    _key: np.ndarray = field(init=False, repr=False)
    _cursor: int = field(default=0, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.trial_index < 0:
            raise ValueError("trial_index must be non-negative")
        self._key = trial_keys(self.seed, self.role, np.asarray([self.trial_index]))

    def next_uniform(self) -> float:
        u = uniforms_at(self._key, self._cursor)
        self._cursor += 1
        return float(u[0])

    def uniforms(self, n: int) -> np.ndarray:
        draws = np.arange(self._cursor, self._cursor + n, dtype=np.uint64)
        self._cursor += n
        return uniforms_at(np.broadcast_to(self._key, (n,)), draws)

    @property
    def cursor(self) -> int:
        return self._cursor


def derive_substream(seed: int, role: str, trial_index: int) -> TrialStream:
    """Deterministic substream for one (seed, role, trial) triple.

    Distinct roles and trial indices give statistically independent streams;
    identical triples give identical streams regardless of evaluation order.
    """
    return TrialStream(seed=seed, role=role, trial_index=trial_index)
