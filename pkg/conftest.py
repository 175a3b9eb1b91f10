"""
Shared fixtures: the two worked networks used throughout the test suite
"""

import numpy as np
import pytest

from src.network.boundary import PortHamiltonian, build_port_hamiltonian
from src.network.graph import EdgeSystem, MatrixFunction, MetricGraph, VertexCondition

# Two edges, one component in each direction per edge
EXAMPLE1_B = np.array([
    [0.0, 0.0, 1.0, 0.0],
    [0.25, 0.0, 0.0, 0.5],
    [0.75, 0.0, 0.0, 0.5],
    [0.0, 1.0, 0.0, 0.0],
])

# Chain of two Timoshenko beams with unit material constants
BEAM_M = -np.array([
    [0.0, 1.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.0, 1.0, 0.0],
])

BEAM_PHI = {
    1: [[1.0, -3.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, -3.0]],
    2: [[1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]],
    3: [[-3.0, -5.0, 0.0, 0.0],
        [0.0, 0.0, -3.0, -5.0]],
}

BEAM_B = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0],
])


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def example1_B():
    return EXAMPLE1_B.copy()


@pytest.fixture
def example1_system():
    return PortHamiltonian.from_matrix(EXAMPLE1_B, m_plus=2)


@pytest.fixture
def beam_parts():
    graph = MetricGraph(vertices=[1, 2, 3], edges=[(1, 1, 2), (2, 2, 3)])
    systems = [EdgeSystem(1, MatrixFunction.constant(BEAM_M)),
               EdgeSystem(2, MatrixFunction.constant(BEAM_M))]
    conds = [VertexCondition(v, phi) for v, phi in BEAM_PHI.items()]
    return graph, systems, conds


@pytest.fixture
def beam_B():
    return BEAM_B.copy()


@pytest.fixture(scope="session")
def beam_system():
    graph = MetricGraph(vertices=[1, 2, 3], edges=[(1, 1, 2), (2, 2, 3)])
    systems = [EdgeSystem(eid, MatrixFunction.constant(BEAM_M)) for eid in (1, 2)]
    conds = [VertexCondition(v, phi) for v, phi in BEAM_PHI.items()]
    ph, _ = build_port_hamiltonian(graph, systems, conds)
    return ph
