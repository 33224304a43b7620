import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import stats

from belllab.lhv import (
    TWO_PI,
    canonical_model,
    circular_distance,
    normalize_angle,
    sample_lambda,
)
from belllab.rng import derive_substream

angles = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)


@given(angles)
def test_normalize_range_and_idempotence(x):
    y = float(normalize_angle(x))
    assert 0.0 <= y < TWO_PI
    assert float(normalize_angle(y)) == y


@given(angles, angles)
def test_circular_distance_symmetric_and_bounded(x, y):
    d = float(circular_distance(x, y))
    assert 0.0 <= d <= math.pi + 1e-12
    assert d == pytest.approx(float(circular_distance(y, x)), abs=0.0)


@given(angles, angles, angles)
def test_circular_distance_translation_invariant(x, y, c):
    d0 = float(circular_distance(x, y))
    d1 = float(circular_distance(x + c, y + c))
    assert d1 == pytest.approx(d0, abs=1e-9)


def test_circular_distance_examples():
    assert float(circular_distance(0.0, 0.0)) == 0.0
    assert float(circular_distance(0.0, 3 * math.pi / 2)) == pytest.approx(math.pi / 2, abs=1e-15)
    assert float(circular_distance(math.pi / 4, math.pi / 2)) == pytest.approx(
        math.pi / 4, abs=1e-15
    )


def test_canonical_response_examples():
    m = canonical_model()
    assert m.response_a(0.0, 0.0) == 1
    assert m.response_a(math.pi, 0.0) == 0
    for theta_b in (0.0, 1.0, 4.0, 6.2):
        assert m.response_b(theta_b + math.pi, theta_b) == 1


def test_responses_are_binary_on_grids():
    m = canonical_model()
    lam = np.linspace(0.0, TWO_PI, 257)
    for theta in (0.0, 0.3, 2.0, 5.5):
        for resp in (m.response_a, m.response_b):
            vals = np.asarray(resp(lam, theta))
            assert set(np.unique(vals)) <= {0, 1}


@given(angles, angles, angles)
@settings(max_examples=200)
def test_canonical_rotational_covariance(lam, theta, c):
    m = canonical_model()
    # stay away from the arc boundary, where float rounding may flip the bit
    assume(abs(float(circular_distance(lam, theta)) - math.pi / 2) > 1e-6)
    assert m.response_a(lam, theta) == m.response_a(
        float(normalize_angle(lam + c)), float(normalize_angle(theta + c))
    )


@given(angles, angles)
@settings(max_examples=200)
def test_response_b_is_shifted_response_a(lam, theta):
    m = canonical_model()
    assume(abs(float(circular_distance(lam, theta + math.pi)) - math.pi / 2) > 1e-9)
    assert m.response_b(lam, theta) == m.response_a(lam, theta + math.pi)


def test_response_fraction_is_half():
    m = canonical_model()
    # fine midpoint grid: the 'on' arc has measure π out of 2π
    n = 1 << 20
    lam = (np.arange(n) + 0.5) * (TWO_PI / n)
    for theta in (0.0, 0.7, 3.9):
        frac = float(np.mean(m.response_a(lam, theta)))
        assert frac == pytest.approx(0.5, abs=4.0 / n)


def test_density_normalized():
    m = canonical_model()
    n = 4096
    lam = (np.arange(n) + 0.5) * (TWO_PI / n)
    mass = float(np.sum(m.density(lam)) * TWO_PI / n)
    assert mass == pytest.approx(1.0, abs=1e-12)


def test_sampler_deterministic_and_in_range():
    m = canonical_model()
    draws1 = [sample_lambda(m, derive_substream(5, "lambda", i)) for i in range(50)]
    draws2 = [sample_lambda(m, derive_substream(5, "lambda", i)) for i in range(50)]
    assert draws1 == draws2
    assert all(0.0 <= x < TWO_PI for x in draws1)


def test_sampler_uniform_mean_at_scale():
    m = canonical_model()
    from belllab.rng import trial_keys, uniforms_at

    n = 1_000_000
    lam = m.lambda_ppf(uniforms_at(trial_keys(321, "lambda", np.arange(n)), 0))
    # mean of U[0, 2π) is π; sd = 2π/sqrt(12)
    se = TWO_PI / math.sqrt(12.0) / math.sqrt(n)
    assert abs(lam.mean() - math.pi) < 4.0 * se


def test_sampler_uniform_ks():
    m = canonical_model()
    from belllab.rng import trial_keys, uniforms_at

    n = 100_000
    lam = m.lambda_ppf(uniforms_at(trial_keys(321, "lambda", np.arange(n)), 0))
    stat = stats.kstest(lam / TWO_PI, "uniform").statistic
    assert stat < 1.6276 / math.sqrt(n)  # 1% critical value
