"""
Test traverse times, reference time detection and subdivision
"""

import numpy as np
import pytest

from src.exceptions import NonPositiveVelocity, RationalDependenceViolated
from src.network.boundary import PortHamiltonian
from src.network.graph import VelocityProfile
from src.normalization.subdivision import (
    refit,
    rescale_state,
    subdivide,
    unrescale_state,
)
from src.normalization.traverse import (
    TraverseMap,
    TraverseTimeTable,
    find_reference_time,
    traverse_times,
)
from src.semigroup.state_function import StateFunction

X = (np.arange(401) + 0.31) / 401


def doubled_example1(example1_B):
    """Example 1 with velocity 2 on both components of edge 1"""
    fast = VelocityProfile.constant(2.0)
    unit = VelocityProfile.constant(1.0)
    return PortHamiltonian.from_matrix(example1_B, m_plus=2,
                                       velocities=[fast, unit, fast, unit])


def slowness_system(m_plus=1):
    """Two components with slowness 1 + x and unit coupling"""
    slow = VelocityProfile.from_pieces([0.0, 1.0], [[1.0, 1.0]], kind="slowness")
    B = np.array([[0.0, 0.5], [0.5, 0.0]])
    return PortHamiltonian.from_matrix(B, m_plus=m_plus, velocities=[slow, slow])


def test_constant_velocity_traverse_times():
    """Test L(x) = x for c = 1 and L(1) = 1/2 for c = 2"""
    unit = TraverseMap(VelocityProfile.constant(1.0))
    assert np.allclose(unit(X), X, atol=1e-15)
    assert unit.total == pytest.approx(1.0)
    assert TraverseMap(VelocityProfile.constant(2.0)).total == pytest.approx(0.5)


def test_polynomial_slowness_is_exact():
    """Test c(x) = 1 / (1 + x) gives L(x) = x + x^2 / 2"""
    L = TraverseMap(VelocityProfile.from_pieces([0.0, 1.0], [[1.0, 1.0]], kind="slowness"))
    assert L.total == pytest.approx(1.5, abs=1e-15)
    assert np.allclose(L(X), X + X ** 2 / 2, atol=1e-15)


def test_affine_velocity_is_exact():
    """Test c(x) = 1 + x gives L(x) = log(1 + x)"""
    L = TraverseMap(VelocityProfile.from_pieces([0.0, 1.0], [[1.0, 1.0]]))
    assert np.allclose(L(X), np.log1p(X), atol=1e-15)


def test_quadratic_velocity_is_fitted():
    """Test c(x) = 1 + x^2 gives L(x) = arctan(x) within 1e-12"""
    L = TraverseMap(VelocityProfile.from_pieces([0.0, 1.0], [[1.0, 0.0, 1.0]]))
    assert L.total == pytest.approx(np.pi / 4, abs=1e-12)
    assert np.max(np.abs(L(X) - np.arctan(X))) <= 1e-12


def test_piecewise_velocity_offsets():
    """Test velocity 1 then 2 across a breakpoint at 1/2"""
    L = TraverseMap(VelocityProfile.from_pieces([0.0, 0.5, 1.0], [[1.0], [2.0]]))
    assert L.total == pytest.approx(0.75)
    assert L(np.array([0.75]))[0] == pytest.approx(0.625)


def test_inverse_map():
    """Test L^{-1}(L(x)) = x for a nonlinear map"""
    L = TraverseMap(VelocityProfile.from_pieces([0.0, 1.0], [[1.0, 0.0, 1.0]]))
    assert np.max(np.abs(L.inverse(L(X)) - X)) <= 1e-13
    assert L.inverse(np.array([0.0, L.total])) == pytest.approx([0.0, 1.0])


def test_nonpositive_velocity_rejected():
    """Test NonPositiveVelocity for c(x) = x"""
    with pytest.raises(NonPositiveVelocity):
        VelocityProfile.from_pieces([0.0, 1.0], [[0.0, 1.0]])


@pytest.mark.parametrize("totals, c, multiples", [
    ((1.0, 1.0), 1.0, (1, 1)),
    ((0.5, 1.0), 2.0, (1, 2)),
    ((1.5, 0.75, 3.0), 4.0 / 3.0, (2, 1, 4)),
])
def test_reference_time(totals, c, multiples):
    """Test the smallest common reference time"""
    table = find_reference_time(TraverseTimeTable(maps=(), totals=np.array(totals)))
    assert table.c == pytest.approx(c)
    assert table.multiples == multiples
    assert table.total_length == sum(multiples)


def test_irrational_ratio_rejected():
    """Test traverse times (1, sqrt 2) have no reference time"""
    table = TraverseTimeTable(maps=(), totals=np.array([1.0, np.sqrt(2.0)]))
    with pytest.raises(RationalDependenceViolated):
        find_reference_time(table, max_denominator=1_000_000)


def test_reference_time_hint():
    """Test a user-supplied c is verified rather than searched"""
    table = TraverseTimeTable(maps=(), totals=np.array([0.5, 1.0]))
    assert find_reference_time(table, c_hint=4.0).multiples == (2, 4)
    with pytest.raises(RationalDependenceViolated):
        find_reference_time(table, c_hint=3.0)


def test_subdivision_without_refinement(example1_system, example1_B):
    """Test unit velocities keep B unchanged"""
    table = find_reference_time(traverse_times(example1_system))
    sub = subdivide(example1_system, table)
    assert sub.dimension == 4
    assert np.array_equal(sub.B, example1_B)


def test_scalar_subdivision():
    """Test B = (beta) with l = 2 gives [[0, beta], [1, 0]]"""
    beta = 0.7
    ph = PortHamiltonian.from_matrix([[beta]], m_plus=1,
                                     velocities=[VelocityProfile.constant(0.5)])
    table = find_reference_time(traverse_times(ph), c_hint=1.0)
    sub = subdivide(ph, table)
    assert np.array_equal(sub.B, [[0.0, beta], [1.0, 0.0]])
    assert sub.system.m_plus == 2


def test_doubled_example1_structure(example1_B):
    """Test l = (1, 2, 1, 2), four boundary rows and two continuity rows"""
    ph = doubled_example1(example1_B)
    table = find_reference_time(traverse_times(ph))
    assert table.c == pytest.approx(2.0)
    assert table.multiples == (1, 2, 1, 2)
    sub = subdivide(ph, table)
    assert sub.dimension == 6
    assert sub.system.m_plus == 3
    assert len(sub.boundary_rows()) == 4
    for row in sub.continuity_rows():
        assert np.count_nonzero(sub.B[row]) == 1
        assert np.max(sub.B[row]) == 1.0
    # u2+ inflow reads the last sub-edge of u2- and the only one of u1+
    assert sub.B[sub.flat_index(1, 1), sub.flat_index(0, 1)] == 0.25
    assert sub.B[sub.flat_index(1, 1), sub.flat_index(3, 2)] == 0.5


def test_rescale_is_identity_for_unit_speed(example1_system, rng):
    """Test Q = I when all l_j = 1 and c = 1"""
    table = find_reference_time(traverse_times(example1_system))
    f = StateFunction.random(rng, 4, pieces=4, degree=2)
    g = rescale_state(example1_system, table, f)
    assert np.max(np.abs(g(X) - f(X))) <= 1e-12


def test_rescale_collapses_for_single_edge():
    """Test c = 2 and l = 1 give nu(y) = upsilon(y)"""
    ph = PortHamiltonian.from_matrix([[0.5]], m_plus=1,
                                     velocities=[VelocityProfile.constant(2.0)])
    table = find_reference_time(traverse_times(ph))
    f = StateFunction.from_pieces([0.0, 1.0], [[[1.0], [2.0], [-1.0]]])
    assert np.max(np.abs(rescale_state(ph, table, f)(X) - f(X))) <= 1e-13


def test_minus_component_sub_edges(example1_B):
    """Test omega_{j,i}(y) = varpi_j(L^{-1}((l_j + y - i) / c)) on a doubled edge"""
    ph = PortHamiltonian.from_matrix(example1_B, m_plus=2, velocities=[
        VelocityProfile.constant(1.0), VelocityProfile.constant(2.0),
        VelocityProfile.constant(1.0), VelocityProfile.constant(2.0)])
    table = find_reference_time(traverse_times(ph))
    assert table.multiples == (2, 1, 2, 1)
    f = StateFunction.from_pieces([0.0, 1.0], [[[0.0] * 4, [1.0] * 4]])
    g = rescale_state(ph, table, f)
    sub = subdivide(ph, table)
    y = X
    # Component u1- (index 2) has l = 2: sub-edge 1 covers x in [1/2, 1]
    assert np.allclose(g(y)[:, sub.flat_index(2, 1)], (1.0 + y) / 2.0)
    assert np.allclose(g(y)[:, sub.flat_index(2, 2)], y / 2.0)
    assert np.allclose(g(y)[:, sub.flat_index(0, 2)], (1.0 + y) / 2.0)


@pytest.mark.parametrize("c_hint", [None, 4.0 / 3.0])
def test_round_trips_with_nonlinear_maps(rng, c_hint):
    """Test Q^{-1} Q f = f and Q Q^{-1} g = g for slowness 1 + x"""
    ph = slowness_system()
    table = find_reference_time(traverse_times(ph), c_hint=c_hint)
    for _ in range(3):
        f = StateFunction.random(rng, 2, pieces=3, degree=1)
        back = unrescale_state(ph, table, rescale_state(ph, table, f))
        assert np.max(np.abs(back(X) - f(X))) <= 1e-9

        g = StateFunction.random(rng, table.total_length, pieces=3, degree=1)
        again = rescale_state(ph, table, unrescale_state(ph, table, g))
        assert np.max(np.abs(again(X) - g(X))) <= 1e-9


def test_round_trip_doubled_example1(example1_B, rng):
    """Test the round trip for constant but unequal velocities"""
    ph = doubled_example1(example1_B)
    table = find_reference_time(traverse_times(ph))
    f = StateFunction.random(rng, 4, pieces=5, degree=2)
    back = unrescale_state(ph, table, rescale_state(ph, table, f))
    assert np.max(np.abs(back(X) - f(X))) <= 1e-12


def test_refit_reaches_tolerance():
    """Test bisection refit of sqrt(1 + x) with cubic pieces"""
    breaks, pieces = refit(lambda x: np.sqrt(1.0 + x), np.array([0.0, 1.0]), 3)
    f = StateFunction.from_components([(breaks, pieces)])
    assert np.max(np.abs(f(X)[:, 0] - np.sqrt(1.0 + X))) <= 1e-10
