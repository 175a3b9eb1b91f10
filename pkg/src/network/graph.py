"""
Metric graph, per-edge hyperbolic systems and vertex conditions
"""

from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.interpolate import PPoly

from src.exceptions import NonPositiveVelocity, ScenarioError


def id_sort_key(identifier):
    """Sort integers numerically and everything else by its string form"""
    if isinstance(identifier, (int, np.integer)):
        return (0, int(identifier), "")
    return (1, 0, str(identifier))


def ascending_to_ppoly(breakpoints, pieces):
    """
    Build a scipy PPoly from per-piece coefficients in ascending powers

    Parameters:
    -----------
    breakpoints : array-like
        Strictly increasing breakpoints 0 = x_0 < ... < x_K = 1
    pieces : list
        For each piece, a list of coefficient arrays [a_0, a_1, ...] of the
        local polynomial sum_r a_r (x - x_i)^r; arrays may be scalars,
        vectors or matrices but must share one shape

    Returns:
    --------
    PPoly
        Piecewise polynomial with coefficient array of shape (deg+1, K, ...)
    """

    breakpoints = np.asarray(breakpoints, dtype=float)
    if breakpoints.ndim != 1 or len(breakpoints) < 2 or np.any(np.diff(breakpoints) <= 0):
        raise ValueError("breakpoints must be strictly increasing with at least two entries")
    if len(pieces) != len(breakpoints) - 1:
        raise ValueError(f"expected {len(breakpoints) - 1} pieces, got {len(pieces)}")

    degree = max(len(p) for p in pieces) - 1
    shape = np.shape(pieces[0][0])
    coefficients = np.zeros((degree + 1, len(pieces)) + shape)
    for i, piece in enumerate(pieces):
        for r, a in enumerate(piece):
            a = np.asarray(a, dtype=float)
            if a.shape != shape:
                raise ValueError("all coefficients must share one shape")
            # PPoly stores descending powers
            coefficients[degree - r, i] = a
    return PPoly(coefficients, breakpoints)


@dataclass(frozen=True)
class Edge:
    """Oriented edge; the parametrization maps tail to 0 and head to 1"""
    edge_id: object
    tail: object
    head: object


@dataclass(frozen=True)
class MetricGraph:
    """Finite, connected and simple graph with oriented edges"""

    vertices: tuple
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(
            e if isinstance(e, Edge) else Edge(*e) for e in self.edges
        ))
        self.validate()

    @property
    def m(self):
        return len(self.edges)

    def validate(self):
        """Check ids, simplicity and connectivity"""

        if len(set(self.vertices)) != len(self.vertices):
            raise ScenarioError("graph.vertices: duplicate vertex id")
        ids = [e.edge_id for e in self.edges]
        if len(set(ids)) != len(ids):
            raise ScenarioError("graph.edges: duplicate edge id")

        known = set(self.vertices)
        graph = nx.Graph()
        graph.add_nodes_from(self.vertices)
        for e in self.edges:
            if e.tail not in known or e.head not in known:
                raise ScenarioError(f"graph.edges[{e.edge_id}]: unknown endpoint vertex")
            if e.tail == e.head:
                raise ScenarioError(f"graph.edges[{e.edge_id}]: loops are not allowed")
            if graph.has_edge(e.tail, e.head):
                raise ScenarioError(
                    f"graph.edges[{e.edge_id}]: multiple edges between {e.tail} and {e.head}"
                )
            graph.add_edge(e.tail, e.head)

        if len(self.vertices) == 0 or not nx.is_connected(graph):
            raise ScenarioError("graph: the graph must be connected")

    def edge(self, edge_id):
        for e in self.edges:
            if e.edge_id == edge_id:
                return e
        raise ScenarioError(f"unknown edge id {edge_id!r}")

    def sorted_edges(self):
        return sorted(self.edges, key=lambda e: id_sort_key(e.edge_id))

    def sorted_vertices(self):
        return sorted(self.vertices, key=id_sort_key)

    def incident(self, vertex):
        """
        Edge endpoints meeting at a vertex

        Returns:
        --------
        list of (Edge, float)
            Incident edges in edge-id order with the endpoint coordinate
            (0.0 for the tail, 1.0 for the head)
        """

        result = []
        for e in self.sorted_edges():
            if e.tail == vertex:
                result.append((e, 0.0))
            elif e.head == vertex:
                result.append((e, 1.0))
        return result


@dataclass(frozen=True)
class MatrixFunction:
    """Piecewise-polynomial square-matrix valued function on [0, 1]"""

    ppoly: PPoly

    @classmethod
    def constant(cls, matrix):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(PPoly(matrix[np.newaxis, np.newaxis], np.array([0.0, 1.0])))

    @classmethod
    def from_pieces(cls, breakpoints, pieces):
        """Pieces hold matrices in ascending local powers"""
        return cls(ascending_to_ppoly(breakpoints, pieces))

    def __post_init__(self):
        shape = self.ppoly.c.shape[2:]
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ValueError(f"matrix function must be square, got shape {shape}")
        if not np.all(np.isfinite(self.ppoly.c)):
            raise ValueError("matrix function has non-finite coefficients")

    @property
    def dimension(self):
        return self.ppoly.c.shape[2]

    @property
    def breakpoints(self):
        return self.ppoly.x

    def __call__(self, x):
        return self.ppoly(x)

    def max_abs(self):
        return float(np.max(np.abs(self.ppoly.c)))

    def is_zero(self, tol=0.0):
        return self.max_abs() <= tol


@dataclass(frozen=True)
class EdgeSystem:
    """The system p_t + M(x) p_x + N(x) p = 0 on one edge"""

    edge_id: object
    M: MatrixFunction
    N: MatrixFunction = None

    def __post_init__(self):
        if self.M.dimension < 1:
            raise ValueError("edge system must have positive dimension")
        if self.N is not None and self.N.dimension != self.M.dimension:
            raise ScenarioError(f"edge_systems[{self.edge_id}]: M and N dimensions differ")

    @property
    def dimension(self):
        return self.M.dimension


@dataclass(frozen=True)
class VertexCondition:
    """Rows of Phi_v acting on the endpoint values of p at vertex v"""

    vertex_id: object
    phi: np.ndarray

    def __post_init__(self):
        phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        object.__setattr__(self, "phi", phi)

    @property
    def rows(self):
        return self.phi.shape[0]


def _profile_extremes(ppoly):
    """Minimum and maximum of a scalar piecewise polynomial on [0, 1]"""

    points = [ppoly.x]
    if ppoly.c.shape[0] > 1:
        roots = ppoly.derivative().roots(discontinuity=False, extrapolate=False)
        points.append(roots[np.isfinite(roots)])
    # Left limits at interior breakpoints
    points.append(np.maximum(ppoly.x[1:] - 1e-14, ppoly.x[0]))
    values = ppoly(np.concatenate(points))
    return float(np.min(values)), float(np.max(values))


@dataclass(frozen=True)
class VelocityProfile:
    """
    Positive propagation speed c(x) of one Riemann component

    The profile is stored either as the velocity itself or as its
    reciprocal (the slowness) when that is the polynomial quantity.
    """

    ppoly: PPoly
    kind: str = "velocity"

    def __post_init__(self):
        if self.kind not in ("velocity", "slowness"):
            raise ValueError(f"unknown velocity profile kind {self.kind!r}")
        if self.ppoly.c.ndim != 2:
            raise ValueError("velocity profile must be scalar valued")
        low, _ = _profile_extremes(self.ppoly)
        if not low > 0:
            raise NonPositiveVelocity(
                f"{self.kind} profile is not bounded away from zero (min {low:.3g})"
            )

    @classmethod
    def constant(cls, value):
        return cls(PPoly(np.array([[float(value)]]), np.array([0.0, 1.0])))

    @classmethod
    def from_pieces(cls, breakpoints, pieces, kind="velocity"):
        return cls(ascending_to_ppoly(breakpoints, pieces), kind)

    def velocity(self, x):
        values = self.ppoly(x)
        return values if self.kind == "velocity" else 1.0 / values

    def slowness(self, x):
        values = self.ppoly(x)
        return 1.0 / values if self.kind == "velocity" else values

    def minimum(self):
        low, high = _profile_extremes(self.ppoly)
        return low if self.kind == "velocity" else 1.0 / high

    def is_unit(self, tol=1e-12):
        """True when c(x) = 1 identically"""
        c = self.ppoly.c.copy()
        c[-1] -= 1.0
        return bool(np.max(np.abs(c)) <= tol)

    def degree(self):
        return self.ppoly.c.shape[0] - 1

    def is_constant(self, tol=1e-14):
        c = self.ppoly.c
        if c.shape[0] > 1 and np.max(np.abs(c[:-1])) > tol:
            return False
        return bool(np.ptp(c[-1]) <= tol)
