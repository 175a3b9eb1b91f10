"""
Backward characteristic tracing for variable velocities

Works directly on the source system, so it needs neither unit speeds nor a
common reference time. A J+ value at (x, t) is the initial datum carried
from L^{-1}(L(x) - t) while t <= L(x), and otherwise the inflow at time
t - L(x); J- components run the other way. Inflow vectors are memoized per
time and filled from the earliest time up, so long horizons need no deep
call chains.
"""

import logging

import numpy as np

from src.config import DEFAULT_TOLERANCES
from src.normalization.traverse import traverse_times

logger = logging.getLogger(__name__)


class CharacteristicsOracle:
    """
    Pointwise solution of a variable-velocity system

    Parameters:
    -----------
    ph : PortHamiltonian
        Source system
    f0 : StateFunction
        Initial datum with 2m components
    tolerances : Tolerances
        time_snap merges nearly equal times
    """

    def __init__(self, ph, f0, tolerances=DEFAULT_TOLERANCES, table=None):
        if f0.ncomp != ph.dimension:
            raise ValueError(f"state has {f0.ncomp} components, system has {ph.dimension}")
        self.ph = ph
        self.f0 = f0
        self.tolerances = tolerances
        self.table = table if table is not None else traverse_times(ph, tolerances)
        self.maps = self.table.maps
        self.totals = np.asarray(self.table.totals, dtype=float)
        self._inflow = {}

    def _key(self, sigma):
        snap = self.tolerances.time_snap
        return round(sigma / snap) * snap

    def _initial(self, k, x):
        return float(self.f0(np.array([x]))[0, k])

    def outflow(self, sigma):
        """Exit traces (upsilon(1), varpi(0)) at time sigma >= 0"""
        out = np.empty(self.ph.dimension)
        for k in range(self.ph.dimension):
            L = self.maps[k]
            if sigma > self.totals[k] + self.tolerances.time_snap:
                out[k] = self.inflow(sigma - self.totals[k])[k]
            elif k < self.ph.m_plus:
                out[k] = self._initial(k, float(L.inverse(np.array([self.totals[k] - sigma]))[0]))
            else:
                out[k] = self._initial(k, float(L.inverse(np.array([sigma]))[0]))
        return out

    def inflow(self, sigma):
        """Entry traces (upsilon(0), varpi(1)) = B (upsilon(1), varpi(0)) at time sigma"""
        sigma = max(sigma, 0.0)
        key = self._key(sigma)
        if key in self._inflow:
            return self._inflow[key]

        # Earlier inflow times are filled first so outflow only reads the memo
        snap = self.tolerances.time_snap
        pending = [sigma]
        while pending:
            s = pending[-1]
            if self._key(s) in self._inflow:
                pending.pop()
                continue
            missing = [s - L for L in self.totals
                       if s > L + snap and self._key(s - L) not in self._inflow]
            if missing:
                pending.extend(missing)
                continue
            self._inflow[self._key(s)] = self.ph.B @ self.outflow(s)
            pending.pop()
        logger.debug("inflow memo holds %d times", len(self._inflow))
        return self._inflow[key]

    def value(self, t, x):
        """Solution vector at one point"""
        if t < 0:
            raise ValueError("time must be nonnegative")
        snap = self.tolerances.time_snap
        result = np.empty(self.ph.dimension)
        for j in range(self.ph.dimension):
            L = self.maps[j]
            position = float(L(np.array([x]))[0])
            if j < self.ph.m_plus:
                travelled = position
                start = position - t
            else:
                travelled = self.totals[j] - position
                start = position + t
            if t <= travelled + snap:
                origin = float(L.inverse(np.array([start]))[0])
                result[j] = self._initial(j, origin)
            else:
                result[j] = self.inflow(t - travelled)[j]
        return result

    def solve(self, t, x_samples):
        x = np.atleast_1d(np.asarray(x_samples, dtype=float))
        return np.array([self.value(t, xi) for xi in x])


def characteristics_solve(ph, f0, t, x_samples, tolerances=DEFAULT_TOLERANCES):
    """
    Sampled solution of a variable-velocity system at time t

    Parameters:
    -----------
    ph : PortHamiltonian
        Source system with any positive velocities
    f0 : StateFunction
        Initial datum
    t : float
        Time, t >= 0
    x_samples : array-like
        Positions in [0, 1]

    Returns:
    --------
    np.ndarray
        Shape (len(x_samples), 2m)
    """

    return CharacteristicsOracle(ph, f0, tolerances).solve(t, x_samples)
