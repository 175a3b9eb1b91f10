"""
Relabel Riemann invariants and assemble the global boundary matrix
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from src.config import DEFAULT_TOLERANCES
from src.exceptions import (
    NonzeroCoupling,
    ScenarioError,
    SingularOutgoingMatrix,
    SinkDetected,
    WrongConditionCount,
)
from src.network.diagonalization import DEFAULT_NODES, diagonalize_edges
from src.network.graph import VelocityProfile, id_sort_key

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RiemannComponent:
    """One relabeled Riemann invariant"""
    edge_id: object
    branch: int
    sign: int
    index: int          # position inside J+ or J- (0-based)

    @property
    def label(self):
        return f"u{self.index + 1}{'+' if self.sign > 0 else '-'}"


@dataclass(frozen=True)
class Relabeling:
    """Bijection between (edge id, branch) and the global state index"""

    components: tuple

    @property
    def m_plus(self):
        return sum(1 for c in self.components if c.sign > 0)

    @property
    def m_minus(self):
        return sum(1 for c in self.components if c.sign < 0)

    @property
    def labels(self):
        return [c.label for c in self.components]

    def global_index(self, edge_id, branch):
        """Index in the 2m state vector; J+ block first"""
        for position, c in enumerate(self.components):
            if c.edge_id == edge_id and c.branch == branch:
                return position
        raise KeyError((edge_id, branch))

    def component(self, position):
        return self.components[position]


def relabel_riemann(graph, diags):
    """
    Group Riemann invariants by direction of propagation

    Parameters:
    -----------
    graph : MetricGraph
        Graph whose edges were diagonalized
    diags : list of EdgeDiagonalization
        One diagonalization per edge

    Returns:
    --------
    Relabeling
        Positive branches numbered first, then negative ones, each sorted
        by (edge id, branch index)
    """

    by_edge = {d.edge_id: d for d in diags}
    missing = [e.edge_id for e in graph.edges if e.edge_id not in by_edge]
    if missing:
        raise ScenarioError(f"edges without a diagonalization: {missing}")

    plus, minus = [], []
    for e in graph.sorted_edges():
        d = by_edge[e.edge_id]
        for branch, sign in enumerate(d.signs):
            (plus if sign > 0 else minus).append((e.edge_id, branch, sign))

    components = [RiemannComponent(eid, b, s, i) for i, (eid, b, s) in enumerate(plus)]
    components += [RiemannComponent(eid, b, s, i) for i, (eid, b, s) in enumerate(minus)]
    return Relabeling(tuple(components))


@dataclass(frozen=True)
class PortHamiltonian:
    """
    Diagonal system on [0, 1] per component with boundary relation

        Xi_out (upsilon(0), varpi(1)) = Xi_in (upsilon(1), varpi(0))

    so that the outgoing traces equal B times the incoming traces.
    """

    m_plus: int
    m_minus: int
    velocities: tuple
    xi_out: np.ndarray
    xi_in: np.ndarray
    B: np.ndarray
    labels: tuple = ()
    relabeling: Relabeling = None

    def __post_init__(self):
        n = self.m_plus + self.m_minus
        for name in ("xi_out", "xi_in", "B"):
            matrix = np.asarray(getattr(self, name), dtype=float)
            if matrix.shape != (n, n):
                raise ValueError(f"{name} must be {n}x{n}, got {matrix.shape}")
            object.__setattr__(self, name, matrix)
        if len(self.velocities) != n:
            raise ValueError(f"expected {n} velocity profiles, got {len(self.velocities)}")
        if not self.labels:
            labels = [f"u{i + 1}+" for i in range(self.m_plus)]
            labels += [f"u{i + 1}-" for i in range(self.m_minus)]
            object.__setattr__(self, "labels", tuple(labels))

    @classmethod
    def from_matrix(cls, B, m_plus, velocities=None, labels=()):
        """Prescribe B directly (Xi_out = I, Xi_in = B)"""
        B = np.atleast_2d(np.asarray(B, dtype=float))
        n = B.shape[0]
        if velocities is None:
            velocities = tuple(VelocityProfile.constant(1.0) for _ in range(n))
        return cls(m_plus, n - m_plus, tuple(velocities), np.eye(n), B.copy(), B, tuple(labels))

    @classmethod
    def from_xi(cls, xi_out, xi_in, m_plus, velocities=None, labels=(),
                tolerances=DEFAULT_TOLERANCES):
        """Solve B = Xi_out^{-1} Xi_in after checking invertibility"""
        xi_out = np.atleast_2d(np.asarray(xi_out, dtype=float))
        xi_in = np.atleast_2d(np.asarray(xi_in, dtype=float))
        n = xi_out.shape[0]
        B = solve_outgoing(xi_out, xi_in, tolerances)
        if velocities is None:
            velocities = tuple(VelocityProfile.constant(1.0) for _ in range(n))
        return cls(m_plus, n - m_plus, tuple(velocities), xi_out, xi_in, B, tuple(labels))

    @property
    def dimension(self):
        return self.m_plus + self.m_minus

    def is_unit_speed(self, tol=1e-12):
        return all(v.is_unit(tol) for v in self.velocities)

    def blocks(self, matrix=None):
        """Split a 2m x 2m matrix into the (++, +-, -+, --) blocks"""
        matrix = self.B if matrix is None else matrix
        p = self.m_plus
        return matrix[:p, :p], matrix[:p, p:], matrix[p:, :p], matrix[p:, p:]


def solve_outgoing(xi_out, xi_in, tolerances=DEFAULT_TOLERANCES):
    """B = Xi_out^{-1} Xi_in with a reciprocal-condition check"""

    if xi_out.shape[0] == 0:
        return np.zeros((0, 0))
    rcond = 1.0 / np.linalg.cond(xi_out, 1) if np.all(np.isfinite(xi_out)) else 0.0
    if not rcond >= tolerances.outgoing_rcond:
        raise SingularOutgoingMatrix(
            f"Xi_out is singular (reciprocal condition number {rcond:.3g})"
        )
    return linalg.solve(xi_out, xi_in)


def assemble_boundary(graph, conds, diags, relabeling, tolerances=DEFAULT_TOLERANCES):
    """
    Assemble Xi_out, Xi_in and B from vertex conditions

    Parameters:
    -----------
    graph : MetricGraph
        Network
    conds : list of VertexCondition
        Conditions Phi_v p(v) = 0
    diags : list of EdgeDiagonalization
        Per-edge diagonalizations
    relabeling : Relabeling
        Global numbering of Riemann invariants
    tolerances : Tolerances
        Numerical thresholds

    Returns:
    --------
    PortHamiltonian
        System with global boundary matrix B = Xi_out^{-1} Xi_in
    """

    by_edge = {d.edge_id: d for d in diags}
    by_vertex = {}
    for cond in conds:
        if cond.vertex_id not in graph.vertices:
            raise ScenarioError(f"vertex_conditions: unknown vertex {cond.vertex_id!r}")
        if cond.vertex_id in by_vertex:
            raise WrongConditionCount(f"vertex {cond.vertex_id!r}: condition given twice")
        by_vertex[cond.vertex_id] = cond

    n = relabeling.m_plus + relabeling.m_minus
    xi_out_rows, xi_in_rows = [], []

    for v in graph.sorted_vertices():
        incident = graph.incident(v)
        blocks, outgoing, incoming = [], [], []
        column = 0
        for edge, x in incident:
            d = by_edge[edge.edge_id]
            blocks.append(d.F(x))
            for branch, sign in enumerate(d.signs):
                target = relabeling.global_index(edge.edge_id, branch)
                # Positive branches leave at the tail, negative ones at the head
                if (sign > 0) == (x == 0.0):
                    outgoing.append((column + branch, target))
                else:
                    incoming.append((column + branch, target))
            column += d.dimension

        cond = by_vertex.get(v)
        rows = 0 if cond is None else cond.rows
        if incoming and not outgoing:
            raise SinkDetected(f"vertex {v!r} has incoming but no outgoing components")
        if rows != len(outgoing):
            raise WrongConditionCount(
                f"vertex {v!r}: {rows} condition rows for {len(outgoing)} outgoing components"
            )
        if cond is None:
            continue
        if cond.phi.shape[1] != column:
            raise WrongConditionCount(
                f"vertex {v!r}: Phi has {cond.phi.shape[1]} columns, expected {column}"
            )

        psi = cond.phi @ linalg.block_diag(*blocks)
        out_rows = np.zeros((rows, n))
        in_rows = np.zeros((rows, n))
        for col, target in outgoing:
            out_rows[:, target] = psi[:, col]
        for col, target in incoming:
            in_rows[:, target] = -psi[:, col]
        xi_out_rows.append(out_rows)
        xi_in_rows.append(in_rows)

    xi_out = np.vstack(xi_out_rows) if xi_out_rows else np.zeros((0, n))
    xi_in = np.vstack(xi_in_rows) if xi_in_rows else np.zeros((0, n))
    if xi_out.shape[0] != n:
        raise WrongConditionCount(f"{xi_out.shape[0]} condition rows in total, expected {n}")

    B = solve_outgoing(xi_out, xi_in, tolerances)

    velocities = []
    for c in relabeling.components:
        velocities.append(by_edge[c.edge_id].branch_velocity(c.branch))

    logger.info("assembled boundary matrix of size %d (m+=%d, m-=%d)",
                n, relabeling.m_plus, relabeling.m_minus)
    return PortHamiltonian(
        m_plus=relabeling.m_plus,
        m_minus=relabeling.m_minus,
        velocities=tuple(velocities),
        xi_out=xi_out,
        xi_in=xi_in,
        B=B,
        labels=tuple(relabeling.labels),
        relabeling=relabeling,
    )


def build_port_hamiltonian(graph, systems, conds, samples=DEFAULT_NODES,
                           tolerances=DEFAULT_TOLERANCES):
    """
    Run the whole pipeline from edge systems to the port-Hamiltonian

    Returns:
    --------
    tuple of (PortHamiltonian, list of EdgeDiagonalization)
        Assembled system and the diagonalizations in edge-id order
    """

    ids = {es.edge_id for es in systems}
    for e in graph.edges:
        if e.edge_id not in ids:
            raise ScenarioError(f"edge_systems: no system for edge {e.edge_id!r}")
    for es in systems:
        if es.edge_id not in {e.edge_id for e in graph.edges}:
            raise ScenarioError(f"edge_systems: unknown edge {es.edge_id!r}")
        if es.N is not None and not es.N.is_zero(tolerances.zero_eigenvalue):
            raise NonzeroCoupling(
                f"edge_systems[{es.edge_id}]: nonzero N is not supported by the solver"
            )

    ordered = sorted(systems, key=lambda es: id_sort_key(es.edge_id))
    diags = diagonalize_edges(ordered, samples, tolerances)
    relabeling = relabel_riemann(graph, diags)
    return assemble_boundary(graph, conds, diags, relabeling, tolerances), diags


@dataclass
class SystemReport:
    """Diagnostics of an assembled system"""
    dimension: int
    m_plus: int
    m_minus: int
    dimension_consistent: bool
    xi_out_condition: float
    xi_consistency: float
    min_velocity: float
    unit_speed: bool
    column_sums: list = field(default_factory=list)
    row_sums: list = field(default_factory=list)
    nonnegative: bool = False
    column_stochastic: bool = False
    row_stochastic: bool = False

    def as_dict(self):
        return dict(self.__dict__)


def validate_system(ph, tolerances=DEFAULT_TOLERANCES):
    """
    Report on dimensions, conditioning, velocities and stochasticity

    Parameters:
    -----------
    ph : PortHamiltonian
        System to inspect
    tolerances : Tolerances
        Numerical thresholds

    Returns:
    --------
    SystemReport
        Informational only; nothing is raised
    """

    n = ph.dimension
    B = ph.B
    consistent = (
        B.shape == (n, n)
        and ph.xi_out.shape == (n, n)
        and ph.xi_in.shape == (n, n)
        and len(ph.velocities) == n
    )
    condition = float(np.linalg.cond(ph.xi_out, 1)) if n else 1.0
    scale = max(float(np.max(np.abs(ph.xi_in))) if n else 0.0, np.finfo(float).tiny)
    xi_residual = float(np.max(np.abs(ph.xi_out @ B - ph.xi_in))) / scale if n else 0.0

    column_sums = B.sum(axis=0)
    row_sums = B.sum(axis=1)
    tol = tolerances.xi_consistency * max(1.0, n)
    nonnegative = bool(np.all(B >= -tol))

    return SystemReport(
        dimension=n,
        m_plus=ph.m_plus,
        m_minus=ph.m_minus,
        dimension_consistent=bool(consistent),
        xi_out_condition=condition,
        xi_consistency=xi_residual,
        min_velocity=min((v.minimum() for v in ph.velocities), default=float("nan")),
        unit_speed=ph.is_unit_speed(),
        column_sums=column_sums.tolist(),
        row_sums=row_sums.tolist(),
        nonnegative=nonnegative,
        column_stochastic=nonnegative and bool(np.all(np.abs(column_sums - 1) <= tol)),
        row_stochastic=nonnegative and bool(np.all(np.abs(row_sums - 1) <= tol)),
    )
