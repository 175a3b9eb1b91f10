"""
Test classification, decay bounds and the limit/stable semigroups
"""

import logging

import numpy as np
import pytest

from src.semigroup.evaluator import Semigroup
from src.semigroup.state_function import StateFunction
from src.spectral.asymptotics import (
    MIXED_NONPERIODIC,
    PERIODIC_LIMIT,
    UNIFORMLY_STABLE,
    UNSTABLE,
    AsymptoticSplit,
    classify,
    evaluate_limit,
    find_period,
    peripheral_projection,
    split_spectrum,
    stable_bound,
    stable_projection,
)
from src.spectral.decomposition import spectral_decompose

X = (np.arange(257) + 0.29) / 257


@pytest.fixture
def example1_sd(example1_B):
    return spectral_decompose(example1_B, m_plus=2)


@pytest.fixture
def beam_sd(beam_system):
    return spectral_decompose(beam_system.B, m_plus=beam_system.m_plus)


def test_example1_is_periodic(example1_sd):
    """Test periodic_limit with d = 2 and stable eigenvalues 1/2, -1/2"""
    report = classify(example1_sd)
    assert report.classification == PERIODIC_LIMIT
    assert report.period == 2
    stable = sorted(example1_sd.eigenvalues[report.stable].real)
    assert np.allclose(stable, [-0.5, 0.5])
    assert report.lambda_bar == pytest.approx(0.5)


def test_beam_is_uniformly_stable(beam_sd):
    """Test the beam rate -(ln 2)/2 and the recipe constant M of about 8.41"""
    report = classify(beam_sd)
    assert report.classification == UNIFORMLY_STABLE
    assert report.period is None
    assert report.lambda_bar == pytest.approx(1 / np.sqrt(2), abs=1e-12)
    assert report.decay_rate == pytest.approx(-np.log(2) / 2, abs=1e-12)
    assert report.M == pytest.approx(8.41, rel=0.02)


def test_constant_limit():
    """Test diag(1, 1/2) gives a period-one limit"""
    report = classify(spectral_decompose(np.diag([1.0, 0.5])))
    assert report.classification == PERIODIC_LIMIT
    assert report.period == 1


def test_single_stable_eigenvalue_bound():
    """Test M = 1/2 and lambda_bar = 1/2 for B = I/2"""
    bound = stable_bound(spectral_decompose(0.5 * np.eye(3)))
    assert bound.lambda_bar == pytest.approx(0.5)
    assert bound.M == pytest.approx(0.5)
    assert bound.envelope == pytest.approx(2.0)


def test_defective_stable_eigenvalue_uses_default_base():
    """Test lambda_bar = (1 + 1/2) / 2 for a Jordan block at 1/2"""
    sd = spectral_decompose(np.array([[0.5, 1.0], [0.0, 0.5]]))
    bound = stable_bound(sd)
    assert bound.lambda_bar == pytest.approx(0.75)
    # sup_n 0.75^-n ||J^n||_1 is finite and attained
    n = np.arange(200)
    values = [np.linalg.norm(np.linalg.matrix_power(sd.B, k), 1) / 0.75 ** k for k in n]
    assert bound.projector_sum == pytest.approx(max(values), rel=1e-9)
    with pytest.raises(ValueError):
        stable_bound(sd, lambda_bar=0.4)


def test_defective_stable_eigenvalue_needs_larger_base(caplog):
    """Test lambda_bar equal to the stable radius is refused for a Jordan block"""
    jordan = np.array([[0.5, 1.0, 0.0], [0.0, 0.5, 1.0], [0.0, 0.0, 0.5]])
    sd = spectral_decompose(jordan)
    with pytest.raises(ValueError, match="defective"):
        stable_bound(sd, lambda_bar=0.5)
    with pytest.raises(ValueError, match="defective"):
        classify(sd, lambda_bar=0.5)

    with caplog.at_level(logging.WARNING):
        bound = stable_bound(sd, lambda_bar=0.6)
    assert "not settled" not in caplog.text
    n = np.arange(400)
    values = [np.linalg.norm(np.linalg.matrix_power(jordan, k), 1) / 0.6 ** k for k in n]
    assert bound.projector_sum == pytest.approx(max(values), rel=1e-9)


def test_semisimple_base_may_equal_radius():
    """Test lambda_bar = max |lambda| is accepted without a Jordan block"""
    bound = stable_bound(spectral_decompose(np.diag([0.5, -0.25])), lambda_bar=0.5)
    assert bound.lambda_bar == pytest.approx(0.5)
    assert bound.projector_sum == pytest.approx(2.0)


def test_unstable_and_mixed_classes(caplog):
    """Test unstable, partial roots of unity and a defective peripheral eigenvalue"""
    assert classify(spectral_decompose(np.diag([1.5, 0.2]))).classification == UNSTABLE

    rotation = np.array([[0.0, -1.0], [1.0, 0.0]])
    mixed = np.zeros((3, 3))
    mixed[:2, :2] = rotation
    mixed[2, 2] = 0.3
    with caplog.at_level(logging.WARNING):
        report = classify(spectral_decompose(mixed))
    assert report.classification == MIXED_NONPERIODIC
    assert not report.growth
    assert "not periodic" in caplog.text

    report = classify(spectral_decompose(np.array([[1.0, 1.0], [0.0, 1.0]])))
    assert report.classification == MIXED_NONPERIODIC
    assert report.growth


def test_find_period_third_roots():
    """Test a cyclic permutation has period three"""
    cycle = np.roll(np.eye(3), 1, axis=0)
    sd = spectral_decompose(cycle)
    peripheral, stable, unstable = split_spectrum(sd)
    assert len(peripheral) == 3 and not stable and not unstable
    assert find_period(sd, peripheral) == 3


def test_limit_plus_stable_is_full_semigroup(example1_system, example1_sd, rng):
    """Test G1(t) f + G2(t) f = G(t) f at t = 1.7 and elsewhere"""
    split = AsymptoticSplit(example1_sd)
    semigroup = Semigroup(example1_system)
    f = StateFunction.random(rng, 4, pieces=4, degree=1)
    for t in (0.0, 0.4, 1.7, 3.0, 6.25):
        total = split.evaluate_limit(f, t, X) + split.evaluate_stable(f, t, X)
        assert np.max(np.abs(total - semigroup.evaluate(f, t, X))) <= 1e-9


def test_stable_part_at_time_zero_is_projection(example1_sd, rng):
    """Test G2(0) f = P2 f"""
    split = AsymptoticSplit(example1_sd)
    f = StateFunction.random(rng, 4, pieces=3, degree=2)
    assert np.allclose(split.evaluate_stable(f, 0.0, X), stable_projection(example1_sd, f)(X),
                       atol=1e-12)


def test_limit_is_two_periodic(example1_sd, rng):
    """Test G1(t + 2) = G1(t) on random data"""
    for _ in range(10):
        f = StateFunction.random(rng, 4, pieces=4, degree=1)
        t = rng.uniform(0.0, 10.0)
        a = evaluate_limit(example1_sd, f, t, X)
        b = evaluate_limit(example1_sd, f, t + 2.0, X)
        assert np.max(np.abs(a - b)) <= 1e-10


def test_example1_convergence_to_limit(example1_system, example1_sd, rng):
    """Test ||G(t) f - G1(t) f||_1 <= C 0.5^floor(t) ||f||_1 for t = 1..20"""
    split = AsymptoticSplit(example1_sd)
    semigroup = Semigroup(example1_system)
    C = split.report.bound.projector_sum
    for _ in range(10):
        f = StateFunction.random(rng, 4, pieces=4, degree=1)
        size = f.norm(1)
        for t in range(1, 21):
            difference = semigroup.evaluate_state(f, t) - split.limit_state(f, t)
            assert difference.norm(1) <= C * 0.5 ** t * size * (1 + 1e-9) + 1e-13


def test_beam_decay(beam_system, beam_sd, rng):
    """Test ||G(t) f||_1 <= envelope * 2^(-t/2) ||f||_1 for t = 1..20"""
    bound = classify(beam_sd).bound
    semigroup = Semigroup(beam_system)
    for _ in range(10):
        f = StateFunction.random(rng, 8, pieces=4, degree=1)
        size = f.norm(1)
        for t in range(1, 21):
            value = semigroup.evaluate_state(f, float(t)).norm(1)
            assert value <= bound.envelope * np.exp(-np.log(2) / 2 * t) * size + 1e-13


def test_beam_has_no_limit(beam_sd, rng):
    """Test that the empty peripheral set gives an error or zeros by flag"""
    f = StateFunction.random(rng, 8)
    with pytest.raises(ValueError):
        evaluate_limit(beam_sd, f, 1.0, X)
    assert np.all(evaluate_limit(beam_sd, f, 1.0, X, empty_ok=True) == 0.0)


def test_peripheral_range_is_invariant(example1_system, example1_sd, rng):
    """Test (I - P1) G(t) P1 f = 0"""
    semigroup = Semigroup(example1_system)
    for _ in range(5):
        f = peripheral_projection(example1_sd, StateFunction.random(rng, 4, pieces=3, degree=1))
        t = rng.uniform(0.0, 5.0)
        g = semigroup.evaluate_state(f, t)
        residual = g - peripheral_projection(example1_sd, g)
        assert residual.norm(1) <= 1e-9


def test_subspace_semigroups_add_up(example1_system, example1_sd, rng):
    """Test that single-eigenvalue semigroups sum to G(t)"""
    split = AsymptoticSplit(example1_sd)
    semigroup = Semigroup(example1_system)
    f = StateFunction.random(rng, 4, pieces=3, degree=1)
    t = 2.6
    total = sum(split.evaluate_subspace([i], f, t, X) for i in range(example1_sd.k))
    assert np.max(np.abs(total - semigroup.evaluate(f, t, X))) <= 1e-9
