"""
Test graph validation, edge diagonalization and boundary assembly
"""

import numpy as np
import pytest

from src.exceptions import (
    NonDiagonalizable,
    NonPositiveVelocity,
    NonzeroCoupling,
    ScenarioError,
    SignChange,
    SingularOutgoingMatrix,
    SinkDetected,
    WrongConditionCount,
    ZeroEigenvalue,
)
from src.network.boundary import (
    PortHamiltonian,
    assemble_boundary,
    build_port_hamiltonian,
    relabel_riemann,
    validate_system,
)
from src.network.diagonalization import diagonalize_edge, eigensystem
from src.network.graph import (
    EdgeSystem,
    MatrixFunction,
    MetricGraph,
    VelocityProfile,
    VertexCondition,
)


def timoshenko_matrix(rho, K, EI, I_rho):
    """Principal part of the beam written as p_t + M p_x = 0"""
    return -np.array([
        [0.0, 1.0 / rho, 0.0, 0.0],
        [K, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0 / I_rho],
        [0.0, 0.0, EI, 0.0],
    ])


# Graph

def test_graph_rejects_loops_and_multi_edges():
    """Test simplicity checks"""
    with pytest.raises(ScenarioError):
        MetricGraph(vertices=[1], edges=[(1, 1, 1)])
    with pytest.raises(ScenarioError):
        MetricGraph(vertices=[1, 2], edges=[(1, 1, 2), (2, 2, 1)])


def test_graph_rejects_disconnected():
    """Test connectivity check"""
    with pytest.raises(ScenarioError):
        MetricGraph(vertices=[1, 2, 3, 4], edges=[(1, 1, 2), (2, 3, 4)])


def test_incident_edges_in_id_order(beam_parts):
    """Test endpoint coordinates at the middle beam vertex"""
    graph = beam_parts[0]
    incident = graph.incident(2)
    assert [(e.edge_id, x) for e, x in incident] == [(1, 1.0), (2, 0.0)]


def test_velocity_profile_must_be_positive():
    """Test that a vanishing speed is rejected"""
    with pytest.raises(NonPositiveVelocity):
        VelocityProfile.from_pieces([0.0, 1.0], [[1.0, -1.0]])
    profile = VelocityProfile.from_pieces([0.0, 1.0], [[1.0, 1.0]], kind="slowness")
    assert profile.minimum() == pytest.approx(0.5)


# Diagonalization

def test_diagonal_matrix():
    """Test an already diagonal system"""
    d = diagonalize_edge(EdgeSystem(1, MatrixFunction.constant(np.diag([-1.0, 1.0]))))
    assert np.allclose(d.eigenvalues_at(0.3), [-1.0, 1.0])
    assert np.allclose(d.F(0.5), np.eye(2))
    assert d.signs == (-1, 1)


def test_symmetric_two_by_two():
    """Test M = [[0, 1], [1, 0]]"""
    d = diagonalize_edge(EdgeSystem(1, MatrixFunction.constant([[0.0, 1.0], [1.0, 0.0]])))
    F = d.F(0.0)
    assert np.allclose(d.eigenvalues_at(0.0), [-1.0, 1.0])
    assert np.allclose(F[:, 0], np.array([1.0, -1.0]) / np.sqrt(2))
    assert np.allclose(F[:, 1], np.array([1.0, 1.0]) / np.sqrt(2))
    assert np.allclose(d.F_inv(0.7) @ F, np.eye(2))


def test_timoshenko_eigenvalues():
    """Test the beam matrix with distinct wave speeds"""
    M = timoshenko_matrix(rho=2.0, K=8.0, EI=9.0, I_rho=1.0)
    d = diagonalize_edge(EdgeSystem(1, MatrixFunction.constant(M)))
    assert np.allclose(d.eigenvalues_at(0.0), [-3.0, -2.0, 2.0, 3.0])

    # lambda = 2 carries (1, -sqrt(K rho), 0, 0)
    expected = np.array([1.0, -4.0, 0.0, 0.0]) / np.sqrt(17.0)
    assert np.allclose(d.F(0.0)[:, 2], expected)

    F, Finv = d.F(0.4), d.F_inv(0.4)
    assert np.max(np.abs(Finv @ M @ F - np.diag([-3.0, -2.0, 2.0, 3.0]))) < 1e-10


def test_repeated_eigenvalues_are_ordered_deterministically():
    """Test tie breaking on the unit beam"""
    M = timoshenko_matrix(1.0, 1.0, 1.0, 1.0)
    values, vectors = eigensystem(M)
    assert np.allclose(values, [-1.0, -1.0, 1.0, 1.0])
    s = 1 / np.sqrt(2)
    assert np.allclose(vectors[:, 0], [s, s, 0, 0])
    assert np.allclose(vectors[:, 1], [0, 0, s, s])
    assert np.allclose(vectors[:, 2], [s, -s, 0, 0])
    assert np.allclose(vectors[:, 3], [0, 0, s, -s])


def test_tied_eigenvectors_descend_lexicographically():
    """Test diag(3, -1, 3) gives e2, then e1 before e3"""
    values, vectors = eigensystem(np.diag([3.0, -1.0, 3.0]))
    assert np.allclose(values, [-1.0, 3.0, 3.0])
    assert np.allclose(vectors, np.eye(3)[:, [1, 0, 2]])


def test_variable_coefficient_diagonalization():
    """Test x-dependent M(x) = diag(-(1+x), 2) rotated by a constant matrix"""
    R = np.array([[1.0, 1.0], [0.0, 1.0]])
    Rinv = np.linalg.inv(R)
    pieces = [[R @ np.diag([-1.0, 2.0]) @ Rinv, R @ np.diag([-1.0, 0.0]) @ Rinv]]
    es = EdgeSystem(1, MatrixFunction.from_pieces([0.0, 1.0], pieces))
    d = diagonalize_edge(es)
    for x in (0.0, 0.25, 0.9, 1.0):
        assert np.allclose(d.eigenvalues_at(x), [-(1 + x), 2.0], atol=1e-10)
    assert d.branch_velocity(0).minimum() == pytest.approx(1.0)
    assert d.residual <= 1e-10


def test_defective_matrix_rejected():
    """Test NonDiagonalizable for a Jordan block"""
    with pytest.raises(NonDiagonalizable):
        diagonalize_edge(EdgeSystem(1, MatrixFunction.constant([[1.0, 1.0], [0.0, 1.0]])))


def test_complex_eigenvalues_rejected():
    """Test NonDiagonalizable for a rotation generator"""
    with pytest.raises(NonDiagonalizable):
        diagonalize_edge(EdgeSystem(1, MatrixFunction.constant([[0.0, -1.0], [1.0, 0.0]])))


def test_zero_eigenvalue_rejected():
    """Test ZeroEigenvalue"""
    with pytest.raises(ZeroEigenvalue):
        diagonalize_edge(EdgeSystem(1, MatrixFunction.constant(np.diag([0.0, 1.0]))))


def test_sign_change_rejected():
    """Test SignChange for an eigenbranch crossing zero between nodes"""
    pieces = [[np.diag([-0.5, 1.0]), np.diag([1.0, 0.0])]]
    es = EdgeSystem(1, MatrixFunction.from_pieces([0.0, 1.0], pieces))
    with pytest.raises(SignChange):
        diagonalize_edge(es, samples=4)


# Relabeling and assembly

def test_relabel_two_edges():
    """Test J+ and J- numbering for two 2x2 edges"""
    graph = MetricGraph(vertices=[1, 2, 3], edges=[(1, 1, 2), (2, 2, 3)])
    diags = [
        diagonalize_edge(EdgeSystem(eid, MatrixFunction.constant(np.diag([-1.0, 1.0]))))
        for eid in (1, 2)
    ]
    relabeling = relabel_riemann(graph, diags)
    assert relabeling.m_plus == 2 and relabeling.m_minus == 2
    assert relabeling.labels == ["u1+", "u2+", "u1-", "u2-"]
    assert relabeling.global_index(2, 1) == 1
    assert relabeling.global_index(1, 0) == 2
    positions = [relabeling.global_index(c.edge_id, c.branch) for c in relabeling.components]
    assert positions == list(range(4))


def test_relabel_pure_transport():
    """Test a single edge with two positive branches"""
    graph = MetricGraph(vertices=[1, 2], edges=[(1, 1, 2)])
    d = diagonalize_edge(EdgeSystem(1, MatrixFunction.constant(np.diag([1.0, 2.0]))))
    relabeling = relabel_riemann(graph, [d])
    assert relabeling.m_plus == 2 and relabeling.m_minus == 0


def test_beam_boundary_matrix(beam_parts, beam_B):
    """Test assembly of the two-beam chain"""
    graph, systems, conds = beam_parts
    ph, diags = build_port_hamiltonian(graph, systems, conds)
    assert ph.m_plus == 4 and ph.m_minus == 4
    assert np.allclose(ph.B, beam_B, atol=1e-12)
    assert np.max(np.abs(ph.xi_out @ ph.B - ph.xi_in)) <= 1e-12 * np.max(np.abs(ph.xi_in))
    assert ph.is_unit_speed()


def test_sink_vertex_rejected():
    """Test that a vertex with only incoming components is refused"""
    graph = MetricGraph(vertices=["a", "b"], edges=[("e", "a", "b")])
    d = diagonalize_edge(EdgeSystem("e", MatrixFunction.constant(np.eye(2))))
    conds = [VertexCondition("a", np.eye(2)), VertexCondition("b", np.zeros((0, 2)))]
    with pytest.raises(SinkDetected):
        assemble_boundary(graph, conds, [d], relabel_riemann(graph, [d]))


def test_identity_coupling():
    """Test Xi_out = Xi_in = I gives B = I"""
    ph = PortHamiltonian.from_xi(np.eye(2), np.eye(2), m_plus=2)
    assert np.allclose(ph.B, np.eye(2))
    assert ph.m_minus == 0


def test_wrong_condition_count(beam_parts):
    """Test a vertex with too few rows"""
    graph, systems, conds = beam_parts
    short = [VertexCondition(conds[0].vertex_id, conds[0].phi[:1])] + list(conds[1:])
    with pytest.raises(WrongConditionCount):
        build_port_hamiltonian(graph, systems, short)


def test_singular_outgoing_matrix(beam_parts):
    """Test duplicated rows at a vertex"""
    graph, systems, conds = beam_parts
    phi = np.vstack([conds[0].phi[0], conds[0].phi[0]])
    bad = [VertexCondition(conds[0].vertex_id, phi)] + list(conds[1:])
    with pytest.raises(SingularOutgoingMatrix):
        build_port_hamiltonian(graph, systems, bad)


def test_nonzero_coupling_rejected(beam_parts):
    """Test that a lower-order term is refused"""
    graph, systems, conds = beam_parts
    N = np.zeros((4, 4))
    N[3, 0] = 1.0
    coupled = [EdgeSystem(systems[0].edge_id, systems[0].M, MatrixFunction.constant(N))]
    with pytest.raises(NonzeroCoupling):
        build_port_hamiltonian(graph, coupled + list(systems[1:]), conds)


def test_validate_example1(example1_system):
    """Test the diagnostics of the Example 1 matrix"""
    report = validate_system(example1_system)
    assert np.allclose(report.column_sums, [1.0, 1.0, 1.0, 1.0])
    assert report.column_stochastic
    assert not report.row_stochastic
    assert report.dimension_consistent
    assert report.min_velocity == pytest.approx(1.0)


def test_validate_identity_and_beam(beam_system):
    """Test stochastic flags for B = I and the beam"""
    report = validate_system(PortHamiltonian.from_matrix(np.eye(3), m_plus=3))
    assert report.column_stochastic and report.row_stochastic

    report = validate_system(beam_system)
    assert not report.nonnegative
    assert not report.column_stochastic
