"""
Unit-speed reduction by edge subdivision

Component j with traverse time L_j(1) = l_j / c is cut into l_j sub-edges of
unit traverse time in the rescaled variable y = c L_j(x) - (i - 1). The
enlarged boundary matrix keeps the rows of B on the first sub-edge of each
component and imposes continuity at the artificial vertices.
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.config import DEFAULT_TOLERANCES, MAX_DEGREE
from src.network.boundary import PortHamiltonian
from src.semigroup.evaluator import Semigroup
from src.semigroup.state_function import GRID_EPS, StateFunction

logger = logging.getLogger(__name__)

# Bisection depth limit of the piecewise refit
MAX_REFIT_DEPTH = 30


def flat_order(ph, multiples):
    """(j, i) pairs in (sign class, j, i) order; j is the source component index"""
    order = []
    for j in range(ph.dimension):
        order.extend((j, i) for i in range(1, multiples[j] + 1))
    # Source components are already sorted J+ first
    return tuple(order)


@dataclass(frozen=True)
class SubdividedSystem:
    """Enlarged unit-speed system together with its source"""
    source: PortHamiltonian
    table: object
    B: np.ndarray
    order: tuple
    system: PortHamiltonian

    @property
    def dimension(self):
        return len(self.order)

    @property
    def c(self):
        return self.table.c

    def flat_index(self, j, i):
        return self.order.index((j, i))

    def boundary_rows(self):
        return [k for k, (_, i) in enumerate(self.order) if i == 1]

    def continuity_rows(self):
        return [k for k, (_, i) in enumerate(self.order) if i > 1]


def subdivide(ph, table):
    """
    Build the l x l boundary matrix of the subdivided system

    Parameters:
    -----------
    ph : PortHamiltonian
        Source system
    table : TraverseTimeTable
        Traverse times with reference time and multiples

    Returns:
    --------
    SubdividedSystem
        Row (j, 1) carries b_jk against the last sub-edge (k, l_k); row
        (j, i) with i > 1 has a single 1 in column (j, i - 1)
    """

    if not table.has_reference:
        raise ValueError("find the reference time before subdividing")
    multiples = table.multiples
    order = flat_order(ph, multiples)
    index = {pair: k for k, pair in enumerate(order)}
    size = len(order)

    B = np.zeros((size, size))
    for (j, i), row in index.items():
        if i == 1:
            for k in range(ph.dimension):
                B[row, index[(k, multiples[k])]] = ph.B[j, k]
        else:
            B[row, index[(j, i - 1)]] = 1.0

    m_plus = sum(multiples[:ph.m_plus])
    labels = tuple(f"{ph.labels[j]}[{i}]" for j, i in order)
    system = PortHamiltonian.from_matrix(B, m_plus, labels=labels)
    logger.debug("subdivided %d components into %d unit sub-edges", ph.dimension, size)
    return SubdividedSystem(source=ph, table=table, B=B, order=order, system=system)


def _fit_interval(func, a, b, degree):
    """Ascending local coefficients interpolating func at Chebyshev points of (a, b)"""
    nodes = np.polynomial.chebyshev.chebpts1(degree + 1)
    x = a + (nodes + 1.0) * (b - a) / 2.0
    return np.polynomial.polynomial.polyfit(x - a, func(x), degree)


def refit(func, breaks, degree, tolerances=DEFAULT_TOLERANCES):
    """
    Piecewise polynomial approximation of a function smooth between breaks

    Each interval is interpolated at interior Chebyshev points and bisected
    until the error on an interior check grid is within the refit tolerance.

    Returns:
    --------
    (np.ndarray, list)
        Breakpoints and ascending per-piece coefficients
    """

    checks = (np.arange(tolerances.refit_points) + 0.5) / tolerances.refit_points
    stack = [(a, b, 0) for a, b in zip(breaks[:-1], breaks[1:]) if b - a > GRID_EPS][::-1]
    out_breaks, pieces = [breaks[0]], []
    worst = 0.0
    while stack:
        a, b, depth = stack.pop()
        coefficients = _fit_interval(func, a, b, degree)
        x = a + checks * (b - a)
        error = float(np.max(np.abs(np.polynomial.polynomial.polyval(x - a, coefficients)
                                    - func(x))))
        if error > tolerances.refit and depth < MAX_REFIT_DEPTH:
            mid = 0.5 * (a + b)
            stack.extend([(mid, b, depth + 1), (a, mid, depth + 1)])
            continue
        worst = max(worst, error)
        out_breaks.append(b)
        pieces.append(coefficients)
    if worst > tolerances.refit:
        logger.warning("refit error %.2e exceeds %.1e", worst, tolerances.refit)
    out_breaks = np.array(out_breaks)
    out_breaks[0], out_breaks[-1] = 0.0, 1.0
    return out_breaks, pieces


def _grid(points):
    points = np.sort(np.clip(np.asarray(points, dtype=float), 0.0, 1.0))
    keep = np.concatenate([[True], np.diff(points) > GRID_EPS])
    points = points[keep]
    points[0], points[-1] = 0.0, 1.0
    return points


def _argument(j, i, y, multiples, c, m_plus):
    """Source time c L_j(x) for sub-edge (j, i) at local position y"""
    if j < m_plus:
        return (y + i - 1) / c
    return (multiples[j] + y - i) / c


def rescale_state(ph, table, f, tolerances=DEFAULT_TOLERANCES):
    """
    Q f: the source state as a state of the subdivided system

    Parameters:
    -----------
    ph : PortHamiltonian
        Source system
    table : TraverseTimeTable
        Traverse times with reference time
    f : StateFunction
        Source state with 2m components

    Returns:
    --------
    StateFunction
        l components; nu_{j,i}(y) = upsilon_j(L_j^{-1}((y + i - 1) / c)) and
        omega_{j,i}(y) = varpi_j(L_j^{-1}((l_j + y - i) / c))
    """

    if f.ncomp != ph.dimension:
        raise ValueError(f"state has {f.ncomp} components, system has {ph.dimension}")
    c, multiples = table.c, table.multiples
    degree = max(f.degree, MAX_DEGREE)
    components = []
    for j, i in flat_order(ph, multiples):
        L = table.maps[j]

        def func(y, j=j, i=i, L=L):
            x = L.inverse(_argument(j, i, y, multiples, c, ph.m_plus))
            return f(x)[:, j]

        # Images of source breakpoints in local coordinates
        source = np.concatenate([f.breakpoints, L.breakpoints])
        if j < ph.m_plus:
            local = c * L(source) - (i - 1)
        else:
            local = c * L(source) - multiples[j] + i
        breaks = _grid(np.concatenate([[0.0, 1.0], local[(local > 0) & (local < 1)]]))
        components.append(refit(func, breaks, f.degree if L.is_affine else degree, tolerances))
    return StateFunction.from_components(components, max_degree=degree)


def unrescale_state(ph, table, g, tolerances=DEFAULT_TOLERANCES):
    """
    Q^{-1} g: a subdivided state back on the source system

    Parameters:
    -----------
    ph : PortHamiltonian
        Source system
    table : TraverseTimeTable
        Traverse times with reference time
    g : StateFunction
        State with l components in flat (sign class, j, i) order

    Returns:
    --------
    StateFunction
        2m components; upsilon_j(x) = nu_{j,i}(c L_j(x) - i + 1) on the
        sub-edge containing x, varpi_j likewise with the reversed numbering
    """

    c, multiples = table.c, table.multiples
    order = flat_order(ph, multiples)
    if g.ncomp != len(order):
        raise ValueError(f"state has {g.ncomp} components, subdivided system has {len(order)}")
    index = {pair: k for k, pair in enumerate(order)}
    degree = max(g.degree, MAX_DEGREE)

    components = []
    for j in range(ph.dimension):
        L = table.maps[j]
        l_j = multiples[j]
        columns = np.array([index[(j, i)] for i in range(1, l_j + 1)])

        def func(x, j=j, L=L, l_j=l_j, columns=columns):
            s = c * L(x)
            whole = np.clip(np.floor(s + GRID_EPS), 0, l_j - 1).astype(int)
            y = np.clip(s - whole, 0.0, 1.0)
            if j < ph.m_plus:
                sub = whole
            else:
                sub = l_j - 1 - whole
            values = g(y)
            return values[np.arange(len(y)), columns[sub]]

        # Artificial vertices and images of the sub-edge breakpoints
        points = [L.inverse(np.arange(l_j + 1) / c), L.breakpoints]
        for i in range(1, l_j + 1):
            y = g.breakpoints
            points.append(L.inverse(_argument(j, i, y, multiples, c, ph.m_plus)))
        breaks = _grid(np.concatenate(points))
        components.append(refit(func, breaks, g.degree if L.is_affine else degree, tolerances))
    return StateFunction.from_components(components, max_degree=degree)


def similarity_solve(sub, f0, t, tolerances=DEFAULT_TOLERANCES):
    """
    Source-system solution Q^{-1} G_unit(c t) Q f0

    Parameters:
    -----------
    sub : SubdividedSystem
        Output of subdivide
    f0 : StateFunction
        Source initial datum
    t : float
        Source time

    Returns:
    --------
    StateFunction
        Solution of the source system at time t
    """

    g0 = rescale_state(sub.source, sub.table, f0, tolerances)
    gt = Semigroup(sub.system, tolerances).evaluate_state(g0, sub.c * t)
    return unrescale_state(sub.source, sub.table, gt, tolerances)
