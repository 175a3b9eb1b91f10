"""
Pydantic schemas for scenario files and command reports
"""

from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config import DEFAULT_SAMPLES, SCHEMA_VERSION

Identifier = Union[int, str]
Matrix = List[List[float]]

# Scenario schemas

class ScalarFunction(BaseModel):
    """Piecewise polynomial on [0, 1]; pieces hold ascending local coefficients"""
    model_config = ConfigDict(extra="forbid")

    breakpoints: List[float] = Field(default_factory=lambda: [0.0, 1.0])
    pieces: List[List[float]]

    @model_validator(mode="after")
    def check_pieces(self):
        if len(self.breakpoints) < 2 or self.breakpoints[0] != 0.0 or self.breakpoints[-1] != 1.0:
            raise ValueError("breakpoints must run from 0 to 1")
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if len(self.pieces) != len(self.breakpoints) - 1:
            raise ValueError(f"expected {len(self.breakpoints) - 1} pieces, got {len(self.pieces)}")
        if any(len(p) == 0 for p in self.pieces):
            raise ValueError("every piece needs at least one coefficient")
        return self


class VelocitySpec(ScalarFunction):
    """Velocity c(x) or, with kind = "slowness", its reciprocal 1/c(x)"""
    kind: Literal["velocity", "slowness"] = "velocity"


class MatrixFunctionSpec(BaseModel):
    """Constant matrix, or piecewise matrix polynomial with ascending coefficients"""
    model_config = ConfigDict(extra="forbid")

    constant: Optional[Matrix] = None
    breakpoints: Optional[List[float]] = None
    pieces: Optional[List[List[Matrix]]] = None

    @model_validator(mode="after")
    def check_form(self):
        if (self.constant is None) == (self.pieces is None):
            raise ValueError("give either 'constant' or 'pieces'")
        if self.pieces is not None and self.breakpoints is None:
            self.breakpoints = [0.0, 1.0]
        return self


class EdgeSpec(BaseModel):
    """Oriented edge from tail (x = 0) to head (x = 1)"""
    model_config = ConfigDict(extra="forbid")

    id: Identifier
    tail: Identifier
    head: Identifier


class GraphSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    vertices: List[Identifier]
    edges: List[EdgeSpec]


class EdgeSystemSpec(BaseModel):
    """p_t + M(x) p_x + N(x) p = 0 on one edge"""
    model_config = ConfigDict(extra="forbid")

    edge: Identifier
    M: MatrixFunctionSpec
    N: Optional[MatrixFunctionSpec] = None


class VertexConditionSpec(BaseModel):
    """Rows of Phi_v acting on the stacked endpoint values at the vertex"""
    model_config = ConfigDict(extra="forbid")

    vertex: Identifier
    phi: Matrix


class PortHamiltonianSpec(BaseModel):
    """Diagonal system given directly by velocities and B (or Xi_out, Xi_in)"""
    model_config = ConfigDict(extra="forbid")

    m_plus: int = Field(ge=0)
    velocities: Optional[List[VelocitySpec]] = None
    B: Optional[Matrix] = None
    xi_out: Optional[Matrix] = None
    xi_in: Optional[Matrix] = None
    labels: Optional[List[str]] = None

    @model_validator(mode="after")
    def check_coupling(self):
        has_xi = self.xi_out is not None or self.xi_in is not None
        if (self.B is None) == (not has_xi):
            raise ValueError("give either 'B' or both 'xi_out' and 'xi_in'")
        if has_xi and (self.xi_out is None or self.xi_in is None):
            raise ValueError("'xi_out' and 'xi_in' must be given together")
        return self


class RunSpec(BaseModel):
    """Run parameters shared by all commands"""
    model_config = ConfigDict(extra="forbid")

    times: List[float] = Field(default_factory=lambda: [0.0])
    samples: int = Field(default=DEFAULT_SAMPLES, ge=1)
    p: float = Field(default=1.0, gt=0)
    tolerances: Dict[str, float] = Field(default_factory=dict)
    max_denominator: Optional[int] = Field(default=None, ge=1)
    c_hint: Optional[float] = Field(default=None, gt=0)
    lambda_bar: Optional[float] = Field(default=None, gt=0, lt=1)
    oracle_grid: int = Field(default=256, ge=1)
    seed: int = 0

    @field_validator("times")
    @classmethod
    def check_times(cls, times):
        if any(t < 0 for t in times):
            raise ValueError("times must be nonnegative")
        return times


class Scenario(BaseModel):
    """Complete scenario file"""
    model_config = ConfigDict(extra="forbid", json_schema_extra={
        "example": {
            "schema_version": 1,
            "name": "two-edge transport",
            "port_hamiltonian": {
                "m_plus": 2,
                "B": [[0, 0, 1, 0], [0.25, 0, 0, 0.5], [0.75, 0, 0, 0.5], [0, 1, 0, 0]]
            },
            "initial_data": {"u1+": {"pieces": [[1.0]]}},
            "run": {"times": [0.0, 1.25]}
        }
    })

    schema_version: int = SCHEMA_VERSION
    name: str = "scenario"
    description: Optional[str] = None
    graph: Optional[GraphSpec] = None
    edge_systems: Optional[List[EdgeSystemSpec]] = None
    vertex_conditions: Optional[List[VertexConditionSpec]] = None
    port_hamiltonian: Optional[PortHamiltonianSpec] = None
    initial_data: Dict[str, ScalarFunction] = Field(default_factory=dict)
    run: RunSpec = Field(default_factory=RunSpec)

    @field_validator("schema_version")
    @classmethod
    def check_version(cls, version):
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {version} (expected {SCHEMA_VERSION})")
        return version

    @model_validator(mode="after")
    def check_system(self):
        network = [self.graph, self.edge_systems, self.vertex_conditions]
        given = [part is not None for part in network]
        if any(given) and not all(given):
            raise ValueError("'graph', 'edge_systems' and 'vertex_conditions' go together")
        if all(given) == (self.port_hamiltonian is not None):
            raise ValueError("give either a network description or 'port_hamiltonian'")
        return self

    @property
    def is_network(self):
        return self.port_hamiltonian is None

# Report schemas

class EigenvalueReport(BaseModel):
    """One distinct eigenvalue of the boundary matrix"""
    real: float
    imag: float
    modulus: float
    multiplicity: int
    semisimple: bool
    kind: Literal["peripheral", "stable", "unstable"]
    projector_norm: float
    rank_one_estimate: Optional[float] = None


class BoundReport(BaseModel):
    """Constants of ||G2(t) f|| <= envelope * lambda_bar^t ||f||"""
    lambda_bar: float
    decay_rate: float
    M: float
    projector_sum: float
    envelope: float
    p: float


class RescaledReport(BaseModel):
    """Unit-time quantities converted back to source time"""
    c: float
    multiples: List[int]
    total_length: int
    decay_rate: Optional[float] = None
    period: Optional[float] = None


class AnalysisReport(BaseModel):
    """Machine-readable output of the analyze command"""
    schema_version: int = SCHEMA_VERSION
    scenario: str
    dimension: int
    m_plus: int
    classification: str
    period: Optional[int] = None
    spectral_radius: float
    growth: bool
    eigenvalues: List[EigenvalueReport]
    bound: Optional[BoundReport] = None
    rescaled: Optional[RescaledReport] = None
    diagnostics: Dict[str, Any] = Field(default_factory=dict)


class RunManifest(BaseModel):
    """Record written next to the snapshots of a simulate run"""
    schema_version: int = SCHEMA_VERSION
    scenario: str
    method: Literal["explicit", "upwind", "characteristics"]
    times: List[float]
    files: List[str]
    samples: int
    labels: List[str]
    c: Optional[float] = None
    multiples: Optional[List[int]] = None
    total_length: Optional[int] = None
    boundary_sha256: Optional[str] = None
    grid: Optional[int] = None


class CheckResult(BaseModel):
    """Outcome of one verification check"""
    name: str
    passed: bool
    seconds: float
    value: Optional[float] = None
    limit: Optional[float] = None
    detail: str = ""


class VerifyReport(BaseModel):
    scenario: str
    seed: int
    explicit: bool
    checks: List[CheckResult]

    @property
    def failed(self):
        return [c for c in self.checks if not c.passed]
