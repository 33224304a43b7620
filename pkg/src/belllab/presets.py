"""Built-in demonstration preset.

A sequenced run at the standard CHSH setting quadruple (π/2, 0, π/4, 3π/4)
whose per-block offsets on Bob's rotations push the apparent CHSH value to
2.072 — above the bound — while the underlying model is strictly local. The
offsets are stated as fractions of π/2 (i.e. the values of 2x/π) because that
is the unit in which they enter the correlators linearly.
"""

from __future__ import annotations

import math

from .errors import SystematicErrorSchedule
from .protocol import SettingsQuad

__all__ = [
    "DEMO_OFFSETS_TWO_OVER_PI",
    "DEMO_QUAD",
    "DEMO_SCHEDULE",
    "DEMO_SPRIME",
    "DEFAULT_REPRODUCE_SEED",
    "DEFAULT_REPRODUCE_TRIALS",
]

DEMO_QUAD = SettingsQuad(
    theta_a=math.pi / 2.0,
    theta_a_prime=0.0,
    theta_b=math.pi / 4.0,
    theta_b_prime=3.0 * math.pi / 4.0,
)

# (alpha, beta, gamma, delta) in units of pi/2, block order (a,b), (a,b'), (a',b), (a',b')
DEMO_OFFSETS_TWO_OVER_PI = (0.018, -0.046, -0.081, -0.073)

DEMO_SCHEDULE = SystematicErrorSchedule(
    *(v * math.pi / 2.0 for v in DEMO_OFFSETS_TWO_OVER_PI)
)

# 2 + (0.018 + 0.046 + 0.081 - 0.073): the apparent violation the preset exhibits
DEMO_SPRIME = 2.072

DEFAULT_REPRODUCE_TRIALS = 1_000_000
DEFAULT_REPRODUCE_SEED = 48657
