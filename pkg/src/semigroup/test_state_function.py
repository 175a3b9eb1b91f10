"""
Test the piecewise-polynomial state algebra
"""

import numpy as np
import pytest
from scipy import integrate

from src.semigroup.state_function import StateFunction, flip, taylor_shift


def sample_points(n=397):
    """Points that avoid typical breakpoints"""
    return (np.arange(n) + 0.37) / n


def test_taylor_shift():
    """Test p(s + 1) for p(s) = 1 + 2s + 3s^2"""
    shifted = taylor_shift(np.array([1.0, 2.0, 3.0]), 1.0)
    assert np.allclose(shifted, [6.0, 8.0, 3.0])


def test_right_continuous_evaluation():
    """Test the value at an interior breakpoint comes from the right piece"""
    f = StateFunction.piecewise_constant([[1.0], [2.0]])
    assert f(np.array([0.5]))[0, 0] == 2.0
    assert f(np.array([0.4999]))[0, 0] == 1.0


def test_refine_keeps_values(rng):
    """Test refinement onto a finer grid"""
    f = StateFunction.random(rng, ncomp=3, pieces=5, degree=3)
    grid = np.unique(np.concatenate([f.breakpoints, rng.uniform(0, 1, 7)]))
    g = f.refine(grid)
    x = sample_points()
    assert g.npieces == len(grid) - 1
    assert np.max(np.abs(f(x) - g(x))) < 1e-13


def test_flip_is_involution(rng):
    """Test flip(flip(f)) = f"""
    f = StateFunction.random(rng, ncomp=4, pieces=6, degree=2)
    x = sample_points()
    assert np.max(np.abs(flip(flip(f, 2), 2)(x) - f(x))) < 1e-13


def test_flip_reverses_minus_block():
    """Test varpi(x) = x becomes 1 - x while upsilon is unchanged"""
    f = StateFunction.from_pieces([0.0, 1.0], [[[0.0, 0.0], [1.0, 1.0]]])
    g = flip(f, m_plus=1)
    x = sample_points()
    assert np.allclose(g(x)[:, 0], x)
    assert np.allclose(g(x)[:, 1], 1.0 - x)


@pytest.mark.parametrize("p", [1, 2])
def test_flip_is_isometric(rng, p):
    """Test ||flip(f)||_p = ||f||_p"""
    for _ in range(5):
        f = StateFunction.random(rng, ncomp=4, pieces=5, degree=3)
        assert abs(flip(f, 2).norm(p) - f.norm(p)) <= 1e-12 * max(1.0, f.norm(p))


def test_norms_exact():
    """Test L1 and L2 norms of simple polynomials"""
    f = StateFunction.from_pieces([0.0, 1.0], [[[-0.5], [1.0]]])
    assert f.norm(1) == pytest.approx(0.25, abs=1e-15)
    g = StateFunction.from_pieces([0.0, 1.0], [[[0.0], [1.0]]])
    assert g.norm(2) == pytest.approx(np.sqrt(1.0 / 3.0), abs=1e-15)


def test_norm_matches_quadrature(rng):
    """Test the L1 norm against adaptive quadrature between breakpoints"""
    f = StateFunction.random(rng, ncomp=2, pieces=4, degree=3)
    breaks = f.breakpoints
    total = 0.0
    for k in range(f.ncomp):
        for a, b in zip(breaks[:-1], breaks[1:]):
            # Interior of each piece only; f jumps at the breakpoints
            value, _ = integrate.quad(lambda s, k=k: abs(f(np.array([s]))[0, k]), a, b,
                                      limit=200, epsabs=1e-13, epsrel=1e-12)
            total += value
    assert f.norm(1) == pytest.approx(total, rel=1e-9)


def test_cell_averages():
    """Test exact averages of f(x) = x over four cells"""
    f = StateFunction.from_pieces([0.0, 1.0], [[[0.0], [1.0]]])
    assert np.allclose(f.cell_averages(4)[:, 0], [0.125, 0.375, 0.625, 0.875])


def test_shifted_segments_form_circular_shift(rng):
    """Test restrict_shift and from_segments"""
    f = StateFunction.random(rng, ncomp=2, pieces=4, degree=2)
    a = 0.3
    segments = [f.restrict_shift(0.0, a, 1.0 - a), f.restrict_shift(a, 1.0, -a)]
    g = StateFunction.from_segments(segments, 2)
    x = sample_points()
    assert np.max(np.abs(g(x) - f(np.mod(x - a, 1.0)))) < 1e-13


def test_matrix_application_and_arithmetic(rng):
    """Test apply_matrix, addition and subtraction"""
    f = StateFunction.random(rng, ncomp=3, pieces=3, degree=1)
    g = StateFunction.random(rng, ncomp=3, pieces=4, degree=2)
    A = rng.normal(size=(3, 3))
    x = sample_points()
    assert np.allclose(f.apply_matrix(A)(x), f(x) @ A.T)
    assert np.allclose((f + g)(x), f(x) + g(x))
    assert (f - f).norm(1) == pytest.approx(0.0, abs=1e-14)


def test_simplify_merges_identical_pieces():
    """Test that a split polynomial is merged back"""
    f = StateFunction.from_pieces([0.0, 1.0], [[[1.0], [2.0]]])
    g = f.refine(np.array([0.0, 0.25, 0.5, 1.0])).simplify(1e-14)
    assert g.npieces == 1


def test_degree_limit():
    """Test that pieces above the configured degree are rejected"""
    with pytest.raises(ValueError):
        StateFunction.from_pieces([0.0, 1.0], [[[1.0]] * 12], max_degree=3)
