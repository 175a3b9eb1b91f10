"""
CFL-1 upwind time stepping for unit-speed systems

At Courant number one the upwind scheme is an exact lattice shift: J+ cells
move one cell right, J- cells one cell left, and the two cells freed at the
ends are filled through the boundary relation. The stepper shares no code
with the closed-form evaluator.
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.config import DEFAULT_TOLERANCES
from src.exceptions import NotUnitSpeed, TimeNotAligned
from src.oracle.compare import SampledSolution
from src.semigroup.state_function import StateFunction

logger = logging.getLogger(__name__)


@dataclass
class GridSolution:
    """Cell values of all components on a uniform grid of N cells per edge"""
    N: int
    values: np.ndarray
    m_plus: int
    steps: int = 0
    fraction: float = 0.0
    labels: tuple = ()

    @property
    def dt(self):
        return 1.0 / self.N

    @property
    def time(self):
        return (self.steps + self.fraction) / self.N

    def cell_centers(self):
        return (np.arange(self.N) + 0.5) / self.N

    def sampled(self):
        return SampledSolution(self.cell_centers(), self.values.copy(), self.labels)

    def as_state(self):
        return StateFunction.piecewise_constant(self.values)


def initial_cells(f0, N):
    """Cell averages of a StateFunction, or a (N, n) array taken as is"""
    if isinstance(f0, StateFunction):
        return f0.cell_averages(N)
    values = np.asarray(f0, dtype=float)
    if values.ndim != 2 or values.shape[0] != N:
        raise ValueError(f"grid data must have shape ({N}, components), got {values.shape}")
    return values.copy()


def _step(u, B, m_plus):
    """One exact CFL-1 step in place"""
    # Outflow traces first, then the boundary relation, then the shift
    outgoing = np.concatenate([u[-1, :m_plus], u[0, m_plus:]])
    inflow = B @ outgoing
    u[1:, :m_plus] = u[:-1, :m_plus]
    u[:-1, m_plus:] = u[1:, m_plus:]
    u[0, :m_plus] = inflow[:m_plus]
    u[-1, m_plus:] = inflow[m_plus:]


def _fractional_step(u, B, m_plus, sigma):
    """First-order upwind step with Courant number sigma in (0, 1)"""
    outgoing = np.concatenate([u[-1, :m_plus], u[0, m_plus:]])
    inflow = B @ outgoing
    upstream = np.empty_like(u)
    upstream[1:, :m_plus] = u[:-1, :m_plus]
    upstream[0, :m_plus] = inflow[:m_plus]
    upstream[:-1, m_plus:] = u[1:, m_plus:]
    upstream[-1, m_plus:] = inflow[m_plus:]
    u += sigma * (upstream - u)


def upwind_solve(ph, f0, t_final, N, fractional_step=False, tolerances=DEFAULT_TOLERANCES):
    """
    Advance a unit-speed system to t_final on a grid of N cells

    Parameters:
    -----------
    ph : PortHamiltonian
        Unit-speed system
    f0 : StateFunction or np.ndarray
        Initial datum (cell averages are taken of a StateFunction)
    t_final : float
        Final time; must be a multiple of 1/N unless fractional_step
    N : int
        Cells per edge
    fractional_step : bool
        Finish a non-aligned time with one step of Courant number below one

    Returns:
    --------
    GridSolution
    """

    if not ph.is_unit_speed():
        raise NotUnitSpeed("the upwind oracle needs unit velocities")
    if N < 1:
        raise ValueError("N must be positive")
    if t_final < 0:
        raise ValueError("time must be nonnegative")

    u = initial_cells(f0, N)
    if u.shape[1] != ph.dimension:
        raise ValueError(f"initial data has {u.shape[1]} components, system has {ph.dimension}")
    if not np.iscomplexobj(u) and np.iscomplexobj(ph.B):
        u = u.astype(complex)

    exact = t_final * N
    steps = int(round(exact))
    sigma = 0.0
    if abs(exact - steps) > tolerances.alignment * max(1.0, exact):
        if not fractional_step:
            raise TimeNotAligned(
                f"t = {t_final!r} is not a multiple of dt = 1/{N}; "
                "pass fractional_step=True to finish with a partial step"
            )
        steps = int(np.floor(exact))
        sigma = float(exact - steps)

    B = ph.B
    for _ in range(steps):
        _step(u, B, ph.m_plus)
    if sigma > 0.0:
        _fractional_step(u, B, ph.m_plus, sigma)
    if not np.all(np.isfinite(u)):
        raise FloatingPointError("upwind solution is no longer finite")

    logger.debug("upwind: %d steps (fraction %.3g) on %d cells", steps, sigma, N)
    return GridSolution(N=N, values=u, m_plus=ph.m_plus, steps=steps, fraction=sigma,
                        labels=tuple(ph.labels))
