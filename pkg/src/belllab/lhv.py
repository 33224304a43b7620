"""Local hidden-variable models on the circle.

A model is a shared hidden variable λ ∈ [0, 2π) with a normalized density and
one deterministic binary response function per party. Each response sees only
the hidden variable and that party's own rotation angle — locality is built
into the call signature.

The built-in model draws λ uniformly; each party answers 1 exactly when λ lies
within a quarter turn of a reference direction (Alice's at her angle, Bob's at
his angle plus a half turn). Response functions must accept numpy arrays and
broadcast, since the protocol engine evaluates whole trial batches at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .rng import TrialStream

__all__ = [
    "TWO_PI",
    "LhvModel",
    "canonical_model",
    "circular_distance",
    "normalize_angle",
    "sample_lambda",
]

TWO_PI = 2.0 * math.pi
HALF_PI = math.pi / 2.0


def normalize_angle(theta):
    """Map any real angle (radians) to its representative in [0, 2π).

    Idempotent: values already in range pass through unchanged. Tiny negative
    inputs would round the modulo up to exactly 2π, so that boundary folds
    back to 0.
    """
    out = np.mod(theta, TWO_PI)
    return np.where(out == TWO_PI, 0.0, out)


def circular_distance(x, y):
    """Shorter arc between two directions, in [0, π].

    Symmetric and invariant under rotating both arguments by the same amount.
    """
    d = np.abs(normalize_angle(x) - normalize_angle(y))
    return np.minimum(d, TWO_PI - d)


def _on_arc(lam, center):
    # Indicator of the closed half-circle arc around ``center``. The boundary
    # (distance exactly π/2) counts as inside: the step function at 0 is taken
    # as 1, a measure-zero convention fixed for reproducibility.
    out = circular_distance(lam, center) <= HALF_PI
    if np.isscalar(out) or out.ndim == 0:
        return int(out)
    return out.astype(np.uint8)


@dataclass(frozen=True)
class LhvModel:
    """A hidden-variable model: density, per-party responses, and λ sampling.

    ``density`` is a non-negative function integrating to 1 over [0, 2π).
    ``response_a``/``response_b`` map (λ, angle) to {0, 1} and must broadcast
    over numpy arrays. ``lambda_ppf`` is the inverse CDF of the density; λ is
    sampled by pushing exactly one uniform through it, which keeps per-trial
    randomness consumption fixed (a requirement of the parallel-determinism
    contract). ``edges_a``/``edges_b`` optionally report, for a given angle,
    the λ values where the response switches — quadrature aligns its
    partition on them to integrate the piecewise-constant integrands exactly.
    """

    density: Callable
    response_a: Callable
    response_b: Callable
    lambda_ppf: Callable
    edges_a: Callable | None = None
    edges_b: Callable | None = None


def canonical_model() -> LhvModel:
    """The built-in uniform-density, half-circle-response model.

    ρ(λ) = 1/(2π); Alice answers 1 when λ is within π/2 of her angle, Bob when
    λ is within π/2 of his angle + π, all distances along the shorter arc.
    """
    return LhvModel(
        density=lambda lam: np.full_like(np.asarray(lam, dtype=float), 1.0 / TWO_PI),
        response_a=lambda lam, theta: _on_arc(lam, theta),
        response_b=lambda lam, theta: _on_arc(lam, np.asarray(theta) + math.pi),
        lambda_ppf=lambda u: np.asarray(u) * TWO_PI,
        edges_a=lambda theta: (theta - HALF_PI, theta + HALF_PI),
        edges_b=lambda theta: (theta + HALF_PI, theta + 3.0 * HALF_PI),
    )


def sample_lambda(model: LhvModel, stream: TrialStream) -> float:
    """Draw one hidden variable from the model using the given substream."""
    return float(normalize_angle(model.lambda_ppf(stream.next_uniform())))
