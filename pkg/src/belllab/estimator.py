"""From trial records to joint probabilities, correlators, and the CHSH value.

Standard errors follow the usual multinomial treatment: per-cell binomial
errors sqrt(p(1-p)/N), correlator error sqrt((1-E^2)/N), and the four-term
combination adds variances because each correlator comes from a disjoint set
of trials in both protocols. The absolute values in the combination are
propagated with the summand signs frozen at their estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .protocol import PAIR_ORDER, SettingPair, TrialLog, TrialRecord

__all__ = [
    "ChshReport",
    "Correlator",
    "InsufficientDataError",
    "JointCounts",
    "JointProbabilities",
    "chsh",
    "correlator_from_cells",
    "correlator_from_shifted_pp",
    "probabilities",
    "tally",
]


class InsufficientDataError(ValueError):
    """Raised when an estimate is requested from zero trials."""


@dataclass(frozen=True)
class JointCounts:
    """Outcome tallies for one setting pair. '+' means outcome 1."""

    pair: SettingPair
    n_pp: int
    n_pm: int
    n_mp: int
    n_mm: int
    total: int

    def __post_init__(self) -> None:
        if min(self.n_pp, self.n_pm, self.n_mp, self.n_mm) < 0:
            raise ValueError("counts must be non-negative")
        if self.n_pp + self.n_pm + self.n_mp + self.n_mm != self.total:
            raise ValueError("cell counts must sum to total")


@dataclass(frozen=True)
class JointProbabilities:
    """The four outcome-cell probabilities with per-cell standard errors.

    ``total`` carries the sample size when the cells are empirical relative
    frequencies; analytic cells leave it None (and their errors at zero).
    """

    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float
    se_pp: float = 0.0
    se_pm: float = 0.0
    se_mp: float = 0.0
    se_mm: float = 0.0
    total: int | None = None

    def __post_init__(self) -> None:
        cells = (self.p_pp, self.p_pm, self.p_mp, self.p_mm)
        if any(not (-1e-12 <= c <= 1.0 + 1e-12) for c in cells):
            raise ValueError(f"cells out of [0,1]: {cells}")
        if abs(sum(cells) - 1.0) > 1e-12:
            raise ValueError(f"cells must sum to 1 (got {sum(cells)!r})")
        if min(self.se_pp, self.se_pm, self.se_mp, self.se_mm) < 0:
            raise ValueError("standard errors must be non-negative")

    def cells(self) -> tuple[float, float, float, float]:
        return (self.p_pp, self.p_pm, self.p_mp, self.p_mm)


@dataclass(frozen=True)
class Correlator:
    """An E(θa, θb) estimate with its standard error.

    |value| ≤ 1 is enforced up to a small allowance scaled by the standard
    error: the shifted-settings estimator combines four independently measured
    probabilities and can statistically overshoot the bound by sampling noise.
    """

    value: float
    se: float = 0.0

    def __post_init__(self) -> None:
        if self.se < 0:
            raise ValueError("standard error must be non-negative")
        if abs(self.value) > 1.0 + max(1e-9, 6.0 * self.se):
            raise ValueError(f"|correlator| = {abs(self.value)!r} exceeds 1 beyond noise")


@dataclass(frozen=True)
class ChshReport:
    """Four correlators and their CHSH combination S = |e1 + e2| + |e3 − e4|,
    where the pairing is e1=(a,b), e2=(a',b), e3=(a,b'), e4=(a',b')."""

    e_ab: Correlator
    e_ab_prime: Correlator
    e_aprime_b: Correlator
    e_aprime_b_prime: Correlator
    s: float
    s_se: float
    protocol_kind: str | None = None
    seed: int | None = None
    totals: tuple[int, int, int, int] | None = None

    def __post_init__(self) -> None:
        if not (0.0 <= self.s <= 4.0):
            raise ValueError(f"S = {self.s!r} outside [0, 4]")
        if self.s_se < 0:
            raise ValueError("standard error must be non-negative")


def tally(records: TrialLog | Iterable[TrialRecord]) -> dict[SettingPair, JointCounts]:
    """Partition records by setting pair and outcome cell.

    Returns one JointCounts per pair in block order; pairs with no records get
    total 0. TrialLog input takes a vectorized path.
    """
    if isinstance(records, TrialLog):
        cell = 2 * (1 - records.outcome_a.astype(np.intp)) + (1 - records.outcome_b.astype(np.intp))
        combined = 4 * records.pair_ids() + cell
        hist = np.bincount(combined, minlength=16)
    else:
        hist = np.zeros(16, dtype=np.int64)
        for rec in records:
            cell = 2 * (1 - rec.outcome_a) + (1 - rec.outcome_b)
            hist[4 * rec.pair.block_index + cell] += 1

    out: dict[SettingPair, JointCounts] = {}
    for pair in PAIR_ORDER:
        n_pp, n_pm, n_mp, n_mm = (int(hist[4 * pair.block_index + c]) for c in range(4))
        out[pair] = JointCounts(
            pair=pair, n_pp=n_pp, n_pm=n_pm, n_mp=n_mp, n_mm=n_mm,
            total=n_pp + n_pm + n_mp + n_mm,
        )
    return out


def probabilities(counts: JointCounts) -> JointProbabilities:
    """Relative frequencies with per-cell binomial standard errors."""
    n = counts.total
    if n <= 0:
        raise InsufficientDataError(f"no trials recorded for pair {counts.pair.code}")

    def se(k: int) -> float:
        p = k / n
        return math.sqrt(p * (1.0 - p) / n)

    return JointProbabilities(
        p_pp=counts.n_pp / n,
        p_pm=counts.n_pm / n,
        p_mp=counts.n_mp / n,
        p_mm=counts.n_mm / n,
        se_pp=se(counts.n_pp),
        se_pm=se(counts.n_pm),
        se_mp=se(counts.n_mp),
        se_mm=se(counts.n_mm),
        total=n,
    )


def correlator_from_cells(probs: JointProbabilities) -> Correlator:
    """E = p_pp + p_mm − p_pm − p_mp (equivalently 2(p_pp + p_mm) − 1)."""
    value = probs.p_pp + probs.p_mm - probs.p_pm - probs.p_mp
    if probs.total:
        se = math.sqrt(max(0.0, 1.0 - value * value) / probs.total)
    else:
        # analytic cells, or caller-supplied errors without a sample size
        se = math.sqrt(probs.se_pp**2 + probs.se_pm**2 + probs.se_mp**2 + probs.se_mm**2)
    return Correlator(value=value, se=se)


def correlator_from_shifted_pp(
    pp_at_four_shifts: Sequence[tuple[float, float]],
) -> Correlator:
    """Correlator assembled from ++ probabilities at shift-displaced settings.

    Inputs are (probability, se) pairs measured at (θa, θb), (θa+π, θb+π),
    (θa, θb+π), (θa+π, θb), in that order; each comes from its own run, so the
    errors add in quadrature. The identification of these four rates with the
    four outcome cells holds for the built-in model (and quantum mechanics)
    but is an extra assumption in general.
    """
    if len(pp_at_four_shifts) != 4:
        raise ValueError("exactly four (probability, se) inputs required")
    (p1, s1), (p2, s2), (p3, s3), (p4, s4) = pp_at_four_shifts
    for p in (p1, p2, p3, p4):
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"probability {p!r} outside [0, 1]")
    value = p1 + p2 - p3 - p4
    se = math.sqrt(s1 * s1 + s2 * s2 + s3 * s3 + s4 * s4)
    return Correlator(value=value, se=se)


def chsh(
    e1: Correlator,
    e2: Correlator,
    e3: Correlator,
    e4: Correlator,
    protocol_kind: str | None = None,
    seed: int | None = None,
    totals: tuple[int, int, int, int] | None = None,
) -> ChshReport:
    """S = |e1 + e2| + |e3 − e4| with e1=E(a,b), e2=E(a',b), e3=E(a,b'),
    e4=E(a',b'). Errors add in quadrature (disjoint trial sets)."""
    s = abs(e1.value + e2.value) + abs(e3.value - e4.value)
    s_se = math.sqrt(e1.se**2 + e2.se**2 + e3.se**2 + e4.se**2)
    return ChshReport(
        e_ab=e1,
        e_ab_prime=e3,
        e_aprime_b=e2,
        e_aprime_b_prime=e4,
        s=s,
        s_se=s_se,
        protocol_kind=protocol_kind,
        seed=seed,
        totals=totals,
    )
