"""
Error taxonomy shared by all subpackages

Every error carries the process exit code the command-line front end uses.
"""


class NetwaveError(Exception):
    """Base class for all domain errors"""
    exit_code = 1


class ScenarioError(NetwaveError):
    """Scenario file could not be parsed or references unknown ids"""
    exit_code = 2


# Assembly errors (exit code 4)

class AssemblyError(NetwaveError):
    """Base class for failures while building the port-Hamiltonian"""
    exit_code = 4


class NonDiagonalizable(AssemblyError):
    """Edge matrix M(x) is defective or has non-real eigenvalues"""


class ZeroEigenvalue(AssemblyError):
    """Some eigenvalue of M(x) vanishes"""


class SignChange(AssemblyError):
    """An eigenbranch changes sign along the edge"""


class SinkDetected(AssemblyError):
    """A vertex has incoming but no outgoing Riemann components"""


class WrongConditionCount(AssemblyError):
    """Rows of a vertex condition do not match its outgoing components"""


class SingularOutgoingMatrix(AssemblyError):
    """The outgoing coupling matrix is (numerically) singular"""


class NonzeroCoupling(AssemblyError):
    """A lower-order term is present; only the principal part is solved"""


class NonPositiveVelocity(AssemblyError):
    """A velocity profile is not bounded away from zero"""


# Solver errors

class RationalDependenceViolated(NetwaveError):
    """Traverse times are not integer multiples of one reference time"""
    exit_code = 3


class ClusterAmbiguity(NetwaveError):
    """Eigenvalue clusters are too close to be told apart"""
    exit_code = 5


class NotUnitSpeed(NetwaveError):
    """The explicit formula needs unit velocities; normalize first"""


class TimeNotAligned(NetwaveError):
    """Requested time is not a multiple of the grid time step"""


class SeriesDiverges(NetwaveError):
    """Neumann series of the resolvent does not converge for this lambda"""


class GridMismatch(NetwaveError):
    """Two sampled solutions live on different grids"""
