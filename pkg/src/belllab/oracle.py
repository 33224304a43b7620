"""Analytic and quadrature ground truth.

Closed forms exist for the built-in model: with d the circular distance
between the two nominal angles, the ++ and −− cells are d/(2π), the mixed
cells 1/2 − d/(2π), and the correlator 2d/π − 1. Everything else is computed
by λ-quadrature over a breakpoint-aware midpoint partition: the integrands are
piecewise constant (or, once error-smoothed, piecewise smooth) with at most a
handful of switch points, so aligning the partition on those points makes the
midpoint rule exact where it matters.

Error smoothing replaces a binary response by its average over the rotation
error distribution — a function with values in [0, 1]. Any such functions,
used consistently across the four measurement contexts, form a valid
hidden-variable model, which is why ``chsh_smoothed`` can never exceed 2 for
setting-local error policies (up to rounding): the bound is structural, not a
numerical accident.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DeltaError, ErrorDistribution, ErrorPolicy
from .estimator import JointProbabilities, correlator_from_cells
from .lhv import TWO_PI, LhvModel, circular_distance, normalize_angle
from .protocol import PAIR_ORDER, SettingsQuad

__all__ = [
    "DEFAULT_QUADRATURE",
    "QuadratureError",
    "QuadratureSpec",
    "SmoothedResponse",
    "UnsupportedPolicyError",
    "block_distributions",
    "chsh_smoothed",
    "correlator_canonical",
    "joint_probs_canonical",
    "joint_probs_numeric",
    "smoothed_joint_probs",
    "smoothed_response",
    "sprime_smoothed",
    "sprime_systematic",
]


class QuadratureError(RuntimeError):
    """Quadrature failed to meet the requested tolerance at the configured nodes."""


class UnsupportedPolicyError(ValueError):
    """The closure computation only applies to setting-local policies."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts and tolerance for λ- and error-integration."""

    lambda_nodes: int = 4096
    error_nodes: int = 64
    tolerance: float = 1e-9

    def __post_init__(self) -> None:
        if self.lambda_nodes < 64 or self.error_nodes < 64:
            raise ValueError("quadrature requires at least 64 nodes")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


DEFAULT_QUADRATURE = QuadratureSpec()


def joint_probs_canonical(theta_a: float, theta_b: float) -> JointProbabilities:
    """Closed-form outcome cells of the built-in model at any real angles."""
    d = float(circular_distance(theta_a, theta_b))
    p = d / TWO_PI
    return JointProbabilities(p_pp=p, p_pm=0.5 - p, p_mp=0.5 - p, p_mm=p)


def correlator_canonical(theta_a: float, theta_b: float) -> float:
    """Closed-form correlator of the built-in model: 2·d/π − 1."""
    return 2.0 * float(circular_distance(theta_a, theta_b)) / math.pi - 1.0


def sprime_systematic(quad: SettingsQuad, schedule) -> float:
    """The apparent CHSH value of a sequenced run with fixed per-block offsets.

    Each block's correlator is evaluated exactly at its offset-shifted angles,
    so the result is correct for any offsets up to the π/4 bound, not just in
    the small-offset linearization 2 + (2/π)(α − β − γ + δ).
    """
    e_ab = correlator_canonical(quad.theta_a + schedule.alice_alpha,
                                quad.theta_b + schedule.alpha)
    e_ab_prime = correlator_canonical(quad.theta_a + schedule.alice_beta,
                                      quad.theta_b_prime + schedule.beta)
    e_aprime_b = correlator_canonical(quad.theta_a_prime + schedule.alice_gamma,
                                      quad.theta_b + schedule.gamma)
    e_aprime_b_prime = correlator_canonical(quad.theta_a_prime + schedule.alice_delta,
                                            quad.theta_b_prime + schedule.delta)
    return abs(e_ab + e_aprime_b) + abs(e_ab_prime - e_aprime_b_prime)


def _partition(breakpoints, total_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite-midpoint nodes and weights on [0, 2π), split at breakpoints."""
    pts = sorted({float(normalize_angle(b)) for b in breakpoints})
    edges = [0.0]
    for p in pts:
        if p - edges[-1] > 1e-13 and TWO_PI - p > 1e-13:
            edges.append(p)
    edges.append(TWO_PI)

    nodes, weights = [], []
    for x0, x1 in zip(edges[:-1], edges[1:]):
        length = x1 - x0
        k = max(1, int(round(total_nodes * length / TWO_PI)))
        h = length / k
        nodes.append(x0 + (np.arange(k) + 0.5) * h)
        weights.append(np.full(k, h))
    return np.concatenate(nodes), np.concatenate(weights)


def _cells_from(wr: np.ndarray, qa: np.ndarray, qb: np.ndarray) -> tuple[float, float, float, float]:
    p_pp = float(np.sum(wr * qa * qb))
    p_pm = float(np.sum(wr * qa * (1.0 - qb)))
    p_mp = float(np.sum(wr * (1.0 - qa) * qb))
    p_mm = float(np.sum(wr * (1.0 - qa) * (1.0 - qb)))
    return p_pp, p_pm, p_mp, p_mm


def joint_probs_numeric(
    model: LhvModel,
    theta_a: float,
    theta_b: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> JointProbabilities:
    """Outcome cells of an arbitrary model by λ-quadrature of ρ·Ma·Mb et al."""
    ta = float(normalize_angle(theta_a))
    tb = float(normalize_angle(theta_b))
    bps: list[float] = []
    if model.edges_a is not None:
        bps.extend(model.edges_a(ta))
    if model.edges_b is not None:
        bps.extend(model.edges_b(tb))
    nodes, w = _partition(bps, spec.lambda_nodes)
    wr = w * np.asarray(model.density(nodes), dtype=float)
    ma = np.asarray(model.response_a(nodes, ta), dtype=float)
    mb = np.asarray(model.response_b(nodes, tb), dtype=float)
    cells = _cells_from(wr, ma, mb)
    mass = sum(cells)
    if abs(mass - 1.0) > spec.tolerance:
        raise QuadratureError(
            f"cells sum to {mass!r}, off by more than tolerance={spec.tolerance}; "
            f"increase lambda_nodes or check the model density"
        )
    return JointProbabilities(*(c / mass for c in cells))


@dataclass(frozen=True)
class SmoothedResponse:
    """A binary response averaged over a rotation-error distribution.

    ``q`` maps λ (scalar or array) into [0, 1]; ``q_raw`` is the same value
    before the guard clip that absorbs sub-tolerance quadrature noise.
    """

    q: Callable
    q_raw: Callable
    nominal: float
    dist: ErrorDistribution


def smoothed_response(
    response: Callable,
    nominal: float,
    dist: ErrorDistribution,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> SmoothedResponse:
    """Build q(λ) = ∫ response(λ, nominal + x) f(x) dx.

    The integrand in x is binary, so instead of brute quadrature the switch
    points are located (grid scan at ``error_nodes`` resolution, then
    bisection) and the distribution's CDF is differenced across the 'on'
    intervals — exact up to switch-point location error (~1e-14 rad).
    Responses switching more than once per grid cell need more error_nodes.
    """
    nominal = float(normalize_angle(nominal))

    if isinstance(dist, DeltaError):
        def raw(lam):
            lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
            vals = np.asarray(response(lam_arr, nominal + dist.offset), dtype=float)
            return vals if np.ndim(lam) else float(vals[0])
        return SmoothedResponse(q=raw, q_raw=raw, nominal=nominal, dist=dist)

    lo, hi = dist.support()
    xs = np.linspace(lo, hi, spec.error_nodes + 1)
    cdf_xs = np.asarray(dist.cdf(xs), dtype=float)
    cell_mass = cdf_xs[1:] - cdf_xs[:-1]

    def raw(lam):
        lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
        vals = np.asarray(response(lam_arr[:, None], nominal + xs[None, :]), dtype=np.int8)
        out = (vals[:, :-1].astype(float) * cell_mass).sum(axis=1)

        rows, cols = np.nonzero(vals[:, 1:] != vals[:, :-1])
        if rows.size:
            x_lo, x_hi = xs[cols].copy(), xs[cols + 1].copy()
            v_lo = vals[rows, cols]
            lam_r = lam_arr[rows]
            for _ in range(60):
                mid = 0.5 * (x_lo + x_hi)
                same = np.asarray(response(lam_r, nominal + mid), dtype=np.int8) == v_lo
                x_lo = np.where(same, mid, x_lo)
                x_hi = np.where(same, x_hi, mid)
            tau = 0.5 * (x_lo + x_hi)
            jump = (vals[rows, cols + 1] - v_lo).astype(float)
            corr = jump * (np.asarray(dist.cdf(xs[cols + 1])) - np.asarray(dist.cdf(tau)))
            np.add.at(out, rows, corr)
        return out if np.ndim(lam) else float(out[0])

    def clipped(lam):
        out = raw(lam)
        return float(np.clip(out, 0.0, 1.0)) if np.isscalar(out) else np.clip(out, 0.0, 1.0)

    return SmoothedResponse(q=clipped, q_raw=raw, nominal=nominal, dist=dist)


def _q_breakpoints(edges_fn, nominal: float, dist: ErrorDistribution) -> list[float]:
    if edges_fn is None:
        return []
    lo, hi = dist.support()
    pts: list[float] = []
    for shift in {lo, hi}:
        pts.extend(edges_fn(nominal + shift))
    return pts


def block_distributions(policy: ErrorPolicy, pair) -> tuple[ErrorDistribution, ErrorDistribution]:
    """The (Alice, Bob) error distributions in force for one setting pair."""
    da = policy.distribution("A", pair.a_choice, pair.b_choice)
    db = policy.distribution("B", pair.b_choice, pair.a_choice)
    return da, db


def smoothed_joint_probs(
    model: LhvModel,
    theta_a: float,
    dist_a: ErrorDistribution,
    theta_b: float,
    dist_b: ErrorDistribution,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> JointProbabilities:
    """Outcome cells when each side's angle carries an error distribution."""
    ta = float(normalize_angle(theta_a))
    tb = float(normalize_angle(theta_b))
    bps = _q_breakpoints(model.edges_a, ta, dist_a) + _q_breakpoints(model.edges_b, tb, dist_b)
    nodes, w = _partition(bps, spec.lambda_nodes)
    wr = w * np.asarray(model.density(nodes), dtype=float)
    mass = float(np.sum(wr))
    qa = np.clip(smoothed_response(model.response_a, ta, dist_a, spec).q(nodes), 0.0, 1.0)
    qb = np.clip(smoothed_response(model.response_b, tb, dist_b, spec).q(nodes), 0.0, 1.0)
    cells = _cells_from(wr, qa, qb)
    return JointProbabilities(*(c / mass for c in cells))


def sprime_smoothed(
    model: LhvModel,
    quad: SettingsQuad,
    policy: ErrorPolicy,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    """Expected apparent CHSH value under any error policy, block by block.

    Every block's cells are integrated on one shared λ partition. For
    setting-local policies the four blocks then share the same two smoothed
    responses per side and the discrete combination obeys S ≤ 2 identically;
    context-dependent policies mix different responses per block, which is
    exactly how the bound escapes.
    """
    block_dists = {pair: block_distributions(policy, pair) for pair in PAIR_ORDER}

    bps: list[float] = []
    for pair in PAIR_ORDER:
        da, db = block_dists[pair]
        bps += _q_breakpoints(model.edges_a, quad.angle("A", pair.a_choice), da)
        bps += _q_breakpoints(model.edges_b, quad.angle("B", pair.b_choice), db)
    nodes, w = _partition(bps, spec.lambda_nodes)
    wr = w * np.asarray(model.density(nodes), dtype=float)
    mass = float(np.sum(wr))

    q_cache: dict = {}

    def q_values(side: str, setting: str, dist: ErrorDistribution) -> np.ndarray:
        key = (side, setting, dist)
        if key not in q_cache:
            nominal = quad.angle(side, setting)
            response = model.response_a if side == "A" else model.response_b
            sm = smoothed_response(response, nominal, dist, spec)
            q_cache[key] = np.clip(sm.q(nodes), 0.0, 1.0)
        return q_cache[key]

    e = {}
    for pair in PAIR_ORDER:
        da, db = block_dists[pair]
        qa = q_values("A", pair.a_choice, da)
        qb = q_values("B", pair.b_choice, db)
        cells = _cells_from(wr, qa, qb)
        probs = JointProbabilities(*(c / mass for c in cells))
        e[pair.code] = correlator_from_cells(probs).value

    return abs(e["ab"] + e["a'b"]) + abs(e["ab'"] - e["a'b'"])


def chsh_smoothed(
    model: LhvModel,
    quad: SettingsQuad,
    policy: ErrorPolicy,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    """S of the error-smoothed model for a setting-local policy (≤ 2 always).

    Context-dependent policies are rejected: no single smoothed model exists
    for them and the bound genuinely can fail — simulate instead.
    """
    if policy.mode != "setting_local":
        raise UnsupportedPolicyError(
            "chsh_smoothed requires a setting-local policy; context-dependent "
            "errors are outside the closure theorem — run the simulation instead"
        )
    return sprime_smoothed(model, quad, policy, spec)
