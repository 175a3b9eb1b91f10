"""
Runtime configuration and numerical tolerances
"""

import os
from dataclasses import dataclass, fields, replace

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Parallelism cap for joblib workers
NETWAVE_THREADS = max(1, int(os.getenv("NETWAVE_THREADS", "1")))

# Default maximum degree of refitted StateFunction pieces
MAX_DEGREE = int(os.getenv("NETWAVE_MAX_DEGREE", "3"))

# Scenario schema version understood by this build
SCHEMA_VERSION = 1

# Default sample count per unit edge for snapshots
DEFAULT_SAMPLES = 256

# CSV float format (17 significant digits)
CSV_FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used across the package"""

    # graph_model
    diagonalization: float = 1e-10
    zero_eigenvalue: float = 1e-12
    eigen_cluster: float = 1e-9
    outgoing_rcond: float = 1e-10
    xi_consistency: float = 1e-12

    # normalization
    integrality: float = 1e-9
    quadrature: float = 1e-12
    inverse_map: float = 1e-14
    refit: float = 1e-10
    refit_points: int = 64
    max_denominator: int = 1_000_000

    # semigroup
    time_snap: float = 1e-12
    semigroup_law: float = 1e-9

    # spectral
    spectral_cluster: float = 1e-9
    spectral_identity: float = 1e-9
    peripheral: float = 1e-9
    root_of_unity: float = 1e-8
    imaginary_residue: float = 1e-9
    defect_merge: float = 1e-4

    # oracle
    series_term: float = 1e-14
    alignment: float = 1e-9

    def override(self, **changes):
        """
        Return a copy with some thresholds replaced

        Parameters:
        -----------
        **changes : float
            Field names and their new values; unknown names raise

        Returns:
        --------
        Tolerances
            Updated copy
        """

        known = {f.name for f in fields(self)}
        unknown = set(changes) - known
        if unknown:
            raise ValueError(f"Unknown tolerance(s): {', '.join(sorted(unknown))}")
        return replace(self, **changes)


DEFAULT_TOLERANCES = Tolerances()
