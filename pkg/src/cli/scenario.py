"""
Turn a scenario file into solver objects
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from src.cli.schemas import Scenario
from src.config import DEFAULT_TOLERANCES
from src.exceptions import RationalDependenceViolated, ScenarioError
from src.network.boundary import PortHamiltonian, build_port_hamiltonian, validate_system
from src.network.graph import EdgeSystem, MatrixFunction, MetricGraph, VertexCondition, VelocityProfile
from src.normalization.subdivision import subdivide
from src.normalization.traverse import find_reference_time, traverse_times
from src.semigroup.state_function import StateFunction

logger = logging.getLogger(__name__)


def load_scenario(path):
    """
    Read and validate a scenario file

    Parameters:
    -----------
    path : str or Path
        JSON scenario file

    Returns:
    --------
    Scenario
        Validated scenario; parse and schema errors raise ScenarioError
    """

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(f"cannot read scenario {path}: {e}") from e
    try:
        return Scenario.model_validate_json(text)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first["loc"]) or "scenario"
        raise ScenarioError(f"{path.name}: {where}: {first['msg']}") from e


def dump_scenario(scenario):
    """Canonical JSON text of a scenario"""
    return json.dumps(scenario.model_dump(mode="json", exclude_none=True), indent=2) + "\n"


def scenario_tolerances(scenario):
    try:
        return DEFAULT_TOLERANCES.override(**scenario.run.tolerances)
    except ValueError as e:
        raise ScenarioError(f"run.tolerances: {e}") from e


def matrix_function(spec):
    if spec.constant is not None:
        return MatrixFunction.constant(spec.constant)
    return MatrixFunction.from_pieces(spec.breakpoints, spec.pieces)


def velocity_profile(spec):
    return VelocityProfile.from_pieces(spec.breakpoints, spec.pieces, kind=spec.kind)


def build_network(scenario, tolerances=DEFAULT_TOLERANCES):
    """Graph, edge systems and vertex conditions of a network scenario"""

    graph = MetricGraph(
        vertices=scenario.graph.vertices,
        edges=[(e.id, e.tail, e.head) for e in scenario.graph.edges],
    )
    systems = []
    for spec in scenario.edge_systems:
        try:
            M = matrix_function(spec.M)
            N = matrix_function(spec.N) if spec.N is not None else None
        except ValueError as e:
            raise ScenarioError(f"edge_systems[{spec.edge}]: {e}") from e
        systems.append(EdgeSystem(spec.edge, M, N))
    conds = [VertexCondition(spec.vertex, spec.phi) for spec in scenario.vertex_conditions]
    return graph, systems, conds


def build_system(scenario, tolerances=DEFAULT_TOLERANCES):
    """
    Assemble the port-Hamiltonian described by a scenario

    Returns:
    --------
    PortHamiltonian
        Network scenarios run the diagonalization and assembly pipeline;
        direct scenarios are taken as given
    """

    if scenario.is_network:
        graph, systems, conds = build_network(scenario, tolerances)
        ph, _ = build_port_hamiltonian(graph, systems, conds, tolerances=tolerances)
        return ph

    spec = scenario.port_hamiltonian
    size = len(spec.B if spec.B is not None else spec.xi_out)
    if spec.m_plus > size:
        raise ScenarioError(f"port_hamiltonian.m_plus: {spec.m_plus} exceeds dimension {size}")
    velocities = None
    if spec.velocities is not None:
        if len(spec.velocities) != size:
            raise ScenarioError(
                f"port_hamiltonian.velocities: expected {size} profiles, got {len(spec.velocities)}"
            )
        velocities = [velocity_profile(v) for v in spec.velocities]
    labels = tuple(spec.labels or ())
    try:
        if spec.B is not None:
            return PortHamiltonian.from_matrix(spec.B, spec.m_plus, velocities, labels)
        return PortHamiltonian.from_xi(spec.xi_out, spec.xi_in, spec.m_plus, velocities,
                                       labels, tolerances)
    except ValueError as e:
        raise ScenarioError(f"port_hamiltonian: {e}") from e


def initial_state(scenario, ph):
    """
    Initial datum keyed by component label; absent components start at zero
    """

    unknown = set(scenario.initial_data) - set(ph.labels)
    if unknown:
        raise ScenarioError(
            f"initial_data: unknown component(s) {', '.join(sorted(unknown))}; "
            f"expected labels {', '.join(ph.labels)}"
        )
    components = []
    for label in ph.labels:
        spec = scenario.initial_data.get(label)
        if spec is None:
            components.append(([0.0, 1.0], [[0.0]]))
        else:
            components.append((spec.breakpoints, spec.pieces))
    return StateFunction.from_components(components)


@dataclass
class ScenarioSetup:
    """Everything a command needs from one scenario"""
    scenario: Scenario
    tolerances: object
    ph: PortHamiltonian
    f0: StateFunction
    table: object = None
    sub: object = None
    reference_error: str = None

    @property
    def name(self):
        return self.scenario.name

    @property
    def explicit(self):
        """True when the closed-form path is available"""
        return self.ph.is_unit_speed() or self.sub is not None

    @property
    def unit_system(self):
        """The unit-speed system whose boundary matrix drives the solution"""
        if self.ph.is_unit_speed():
            return self.ph
        if self.sub is None:
            raise RationalDependenceViolated(self.reference_error)
        return self.sub.system

    def sample_positions(self, samples=None):
        samples = samples or self.scenario.run.samples
        return (np.arange(samples) + 0.5) / samples

    def diagnostics(self):
        return validate_system(self.ph, self.tolerances)


def prepare(path, require_reference=False):
    """
    Load, assemble and normalize a scenario

    Parameters:
    -----------
    path : str or Path
        Scenario file
    require_reference : bool
        Raise RationalDependenceViolated instead of recording it

    Returns:
    --------
    ScenarioSetup
    """

    scenario = load_scenario(path)
    tolerances = scenario_tolerances(scenario)
    ph = build_system(scenario, tolerances)
    f0 = initial_state(scenario, ph)
    setup = ScenarioSetup(scenario, tolerances, ph, f0)
    if ph.is_unit_speed():
        return setup

    table = traverse_times(ph, tolerances)
    setup.table = table
    try:
        table = find_reference_time(table, scenario.run.c_hint, scenario.run.max_denominator,
                                    tolerances)
    except RationalDependenceViolated as e:
        if require_reference:
            raise
        logger.info("no common reference time: %s", e)
        setup.reference_error = str(e)
        return setup
    setup.table = table
    setup.sub = subdivide(ph, table)
    logger.info("reference time c=%.12g, multiples %s", table.c, table.multiples)
    return setup
