"""
Vector-valued piecewise polynomials on [0, 1)

All components share one breakpoint grid. Coefficients are stored the way
scipy's PPoly stores them: shape (degree+1, pieces, components), highest
local power first, polynomial of piece i written in s = x - x_i. Evaluation
is right-continuous at breakpoints.
"""

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.interpolate import PPoly
from scipy.special import comb

from src.config import MAX_DEGREE

# Breakpoints closer than this are merged
GRID_EPS = 1e-13


def taylor_shift(asc, delta):
    """
    Coefficients of q(s) = p(s + delta)

    Parameters:
    -----------
    asc : np.ndarray
        Ascending coefficients of p along axis 0 (trailing axes are batched)
    delta : float
        Shift of the local variable

    Returns:
    --------
    np.ndarray
        Ascending coefficients of q, same shape as asc
    """

    asc = np.asarray(asc)
    if delta == 0.0:
        return asc.copy()
    degree = asc.shape[0] - 1
    out = np.zeros_like(asc)
    for r in range(degree + 1):
        k = np.arange(r, degree + 1)
        weights = comb(k, r) * delta ** (k - r)
        out[r] = np.tensordot(weights, asc[r:], axes=(0, 0))
    return out


def _merge_grid(*grids):
    """Sorted union of breakpoint grids with near-duplicates removed"""
    points = np.sort(np.concatenate([np.asarray(g, dtype=float) for g in grids]))
    keep = np.concatenate([[True], np.diff(points) > GRID_EPS])
    points = points[keep]
    points[0], points[-1] = 0.0, 1.0
    return points


class StateFunction:
    """Piecewise-polynomial state on [0, 1) with several components"""

    def __init__(self, breakpoints, coefficients, max_degree=None):
        breakpoints = np.asarray(breakpoints, dtype=float)
        coefficients = np.asarray(coefficients)
        if coefficients.dtype.kind not in "fc":
            coefficients = coefficients.astype(float)
        if coefficients.ndim != 3:
            raise ValueError("coefficients must have shape (degree+1, pieces, components)")
        if breakpoints.ndim != 1 or len(breakpoints) != coefficients.shape[1] + 1:
            raise ValueError("need one more breakpoint than pieces")
        if abs(breakpoints[0]) > GRID_EPS or abs(breakpoints[-1] - 1.0) > GRID_EPS:
            raise ValueError("breakpoints must span [0, 1]")
        if np.any(np.diff(breakpoints) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(coefficients)):
            raise ValueError("coefficients must be finite")

        limit = MAX_DEGREE if max_degree is None else max_degree
        coefficients = self._trim(coefficients)
        if coefficients.shape[0] - 1 > limit:
            raise ValueError(
                f"piece degree {coefficients.shape[0] - 1} exceeds the maximum {limit} "
                "(raise NETWAVE_MAX_DEGREE to allow it)"
            )

        self._max_degree = limit
        self._pp = PPoly(coefficients, breakpoints, extrapolate=True)

    @staticmethod
    def _trim(coefficients):
        """Drop leading all-zero powers"""
        top = 0
        while top < coefficients.shape[0] - 1 and not np.any(coefficients[top]):
            top += 1
        return coefficients[top:]

    # Constructors

    @classmethod
    def zeros(cls, ncomp):
        return cls([0.0, 1.0], np.zeros((1, 1, ncomp)))

    @classmethod
    def constant(cls, values):
        values = np.atleast_1d(np.asarray(values, dtype=float))
        return cls([0.0, 1.0], values[np.newaxis, np.newaxis, :])

    @classmethod
    def from_pieces(cls, breakpoints, pieces, max_degree=None):
        """
        Build from ascending per-piece coefficients

        Parameters:
        -----------
        breakpoints : array-like
            Shared grid 0 = x_0 < ... < x_K = 1
        pieces : list
            pieces[i][r] is the vector of coefficients of (x - x_i)^r on
            piece i, one entry per component
        """

        degree = max(len(p) for p in pieces) - 1
        ncomp = len(pieces[0][0])
        c = np.zeros((degree + 1, len(pieces), ncomp))
        for i, piece in enumerate(pieces):
            for r, a in enumerate(piece):
                c[degree - r, i] = a
        return cls(breakpoints, c, max_degree)

    @classmethod
    def from_components(cls, components, max_degree=None):
        """
        Stack scalar piecewise polynomials with their own grids

        Parameters:
        -----------
        components : list of (breakpoints, pieces)
            pieces[i] lists ascending coefficients of piece i
        """

        scalars = []
        for breakpoints, pieces in components:
            pieces = [[[a] for a in piece] for piece in pieces]
            scalars.append(cls.from_pieces(breakpoints, pieces, max_degree))
        return cls.stack(scalars)

    @classmethod
    def piecewise_constant(cls, values, breakpoints=None):
        """values has shape (cells, components); uniform cells by default"""
        values = np.asarray(values)
        if values.ndim == 1:
            values = values[:, np.newaxis]
        if breakpoints is None:
            breakpoints = np.linspace(0.0, 1.0, values.shape[0] + 1)
        return cls(breakpoints, values[np.newaxis])

    @classmethod
    def from_segments(cls, segments, ncomp, max_degree=None):
        """
        Concatenate segments covering [0, 1) left to right

        Parameters:
        -----------
        segments : list of (breakpoints, coefficients)
            Each segment spans [breakpoints[0], breakpoints[-1]] with
            coefficients shaped (degree+1, pieces, ncomp)
        """

        segments = [(b, c) for b, c in segments if len(b) > 1 and b[-1] - b[0] > GRID_EPS]
        degree = max(c.shape[0] for _, c in segments) - 1
        dtype = np.result_type(*[c.dtype for _, c in segments])
        breaks = [segments[0][0][:1]]
        blocks = []
        for b, c in segments:
            padded = np.zeros((degree + 1, c.shape[1], ncomp), dtype=dtype)
            padded[degree + 1 - c.shape[0]:] = c
            breaks.append(b[1:])
            blocks.append(padded)
        breakpoints = np.concatenate(breaks)
        coefficients = np.concatenate(blocks, axis=1)

        # Drop slivers created by round-off at segment joins
        widths = np.diff(breakpoints)
        keep = widths > GRID_EPS
        if not np.all(keep):
            coefficients = coefficients[:, keep]
            breakpoints = np.concatenate([[breakpoints[0]], breakpoints[1:][keep]])
        breakpoints[0], breakpoints[-1] = 0.0, 1.0
        return cls(breakpoints, coefficients, max_degree)

    @classmethod
    def stack(cls, functions):
        """Concatenate components of several state functions"""
        grid = _merge_grid(*[f.breakpoints for f in functions])
        refined = [f.refine(grid) for f in functions]
        degree = max(f.degree for f in refined)
        blocks = []
        for f in refined:
            c = f.coefficients
            padded = np.zeros((degree + 1,) + c.shape[1:], dtype=c.dtype)
            padded[degree + 1 - c.shape[0]:] = c
            blocks.append(padded)
        limit = max(f._max_degree for f in functions)
        return cls(grid, np.concatenate(blocks, axis=2), limit)

    @classmethod
    def random(cls, rng, ncomp, pieces=4, degree=1, continuous=False):
        """Random piecewise polynomial with interior breakpoints drawn uniformly"""
        interior = np.sort(rng.uniform(0.05, 0.95, size=pieces - 1))
        breakpoints = np.concatenate([[0.0], interior, [1.0]])
        limit = max(degree, MAX_DEGREE)
        if continuous:
            # Piecewise linear through random node values
            values = rng.uniform(-1.0, 1.0, size=(pieces + 1, ncomp))
            slopes = np.diff(values, axis=0) / np.diff(breakpoints)[:, None]
            return cls(breakpoints, np.stack([slopes, values[:-1]]), limit)
        c = rng.uniform(-1.0, 1.0, size=(degree + 1, pieces, ncomp))
        return cls(breakpoints, c, limit)

    # Accessors

    @property
    def breakpoints(self):
        return self._pp.x

    @property
    def coefficients(self):
        return self._pp.c

    @property
    def ncomp(self):
        return self._pp.c.shape[2]

    @property
    def npieces(self):
        return self._pp.c.shape[1]

    @property
    def degree(self):
        return self._pp.c.shape[0] - 1

    @property
    def is_complex(self):
        return np.iscomplexobj(self._pp.c)

    def ppoly(self):
        return self._pp

    def __call__(self, x):
        """Values at x, shape x.shape + (ncomp,)"""
        return self._pp(np.asarray(x, dtype=float))

    def __repr__(self):
        return (f"StateFunction(ncomp={self.ncomp}, pieces={self.npieces}, "
                f"degree={self.degree})")

    def _new(self, breakpoints, coefficients):
        return StateFunction(breakpoints, coefficients, self._max_degree)

    # Grid manipulation

    def refine(self, grid):
        """Same function on a superset grid"""
        grid = np.asarray(grid, dtype=float)
        old = self.breakpoints
        if len(grid) == len(old) and np.allclose(grid, old, atol=GRID_EPS, rtol=0):
            return self
        idx = np.clip(np.searchsorted(old, grid[:-1] + GRID_EPS, side="right") - 1,
                      0, self.npieces - 1)
        asc = self.coefficients[::-1]
        c = np.empty((asc.shape[0], len(grid) - 1, self.ncomp), dtype=asc.dtype)
        for k, (i, start) in enumerate(zip(idx, grid[:-1])):
            c[:, k] = taylor_shift(asc[:, i], start - old[i])
        return self._new(grid, c[::-1])

    def restrict_shift(self, a, b, shift):
        """
        Pieces of x -> f(x + shift) on [a, b]

        Returns:
        --------
        tuple of (np.ndarray, np.ndarray)
            Breakpoints from a to b and coefficients in PPoly layout,
            ready for from_segments
        """

        lo, hi = a + shift, b + shift
        if lo < -GRID_EPS or hi > 1.0 + GRID_EPS:
            raise ValueError(f"[{lo}, {hi}] is not inside [0, 1]")
        old = self.breakpoints
        inside = old[(old > lo + GRID_EPS) & (old < hi - GRID_EPS)]
        breaks = np.concatenate([[a], inside - shift, [b]])
        idx = np.clip(np.searchsorted(old, breaks[:-1] + shift + GRID_EPS, side="right") - 1,
                      0, self.npieces - 1)
        asc = self.coefficients[::-1]
        c = np.empty((asc.shape[0], len(breaks) - 1, self.ncomp), dtype=asc.dtype)
        for k, (i, start) in enumerate(zip(idx, breaks[:-1])):
            c[:, k] = taylor_shift(asc[:, i], start + shift - old[i])
        return breaks, c[::-1]

    def reflect(self):
        """x -> f(1 - x) for every component"""
        old = self.breakpoints
        widths = np.diff(old)
        asc = self.coefficients[::-1]
        degree = asc.shape[0] - 1
        signs = (-1.0) ** np.arange(degree + 1)
        c = np.empty_like(asc)
        for i in range(self.npieces):
            # Piece i of the result is p_i(h - s)
            c[:, self.npieces - 1 - i] = taylor_shift(asc[:, i], widths[i]) * signs[:, None]
        return self._new(1.0 - old[::-1], c[::-1])

    def select(self, indices):
        """Subset of components"""
        return self._new(self.breakpoints, self.coefficients[:, :, list(indices)])

    def where(self, mask, other):
        """Components from other where mask is true, from self elsewhere"""
        mask = np.asarray(mask, dtype=bool)
        grid = _merge_grid(self.breakpoints, other.breakpoints)
        a, b = self.refine(grid), other.refine(grid)
        degree = max(a.degree, b.degree)
        dtype = np.result_type(a.coefficients, b.coefficients)
        out = np.zeros((degree + 1, len(grid) - 1, self.ncomp), dtype=dtype)
        out[degree - a.degree:, :, ~mask] = a.coefficients[:, :, ~mask]
        out[degree - b.degree:, :, mask] = b.coefficients[:, :, mask]
        return self._new(grid, out)

    # Algebra

    def apply_matrix(self, matrix):
        """x -> matrix @ f(x)"""
        matrix = np.asarray(matrix)
        if matrix.shape[1] != self.ncomp:
            raise ValueError(f"matrix has {matrix.shape[1]} columns, state has {self.ncomp}")
        c = np.einsum("dkj,ij->dki", self.coefficients, matrix)
        return self._new(self.breakpoints, c)

    def _binary(self, other, op):
        if np.isscalar(other):
            c = self.coefficients.copy()
            c[-1] = op(c[-1], other)
            return self._new(self.breakpoints, c)
        if other.ncomp != self.ncomp:
            raise ValueError("component counts differ")
        grid = _merge_grid(self.breakpoints, other.breakpoints)
        a, b = self.refine(grid), other.refine(grid)
        degree = max(a.degree, b.degree)
        dtype = np.result_type(a.coefficients, b.coefficients)
        ca = np.zeros((degree + 1, len(grid) - 1, self.ncomp), dtype=dtype)
        cb = np.zeros_like(ca)
        ca[degree - a.degree:] = a.coefficients
        cb[degree - b.degree:] = b.coefficients
        return self._new(grid, op(ca, cb))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        return self._new(self.breakpoints, self.coefficients * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    @property
    def real(self):
        return self._new(self.breakpoints, self.coefficients.real.copy())

    @property
    def imag(self):
        return self._new(self.breakpoints, self.coefficients.imag.copy())

    def derivative(self):
        c = self._pp.derivative().c
        return self._new(self.breakpoints, c)

    def simplify(self, tol=0.0):
        """Remove breakpoints where neighbouring pieces are the same polynomial"""
        breaks = [self.breakpoints[0]]
        pieces = [self.coefficients[::-1][:, 0]]
        asc = self.coefficients[::-1]
        for i in range(1, self.npieces):
            continued = taylor_shift(pieces[-1], self.breakpoints[i] - breaks[-1])
            if np.max(np.abs(continued - asc[:, i])) <= tol:
                continue
            breaks.append(self.breakpoints[i])
            pieces.append(asc[:, i])
        breaks.append(self.breakpoints[-1])
        c = np.stack(pieces, axis=1)[::-1]
        return self._new(np.array(breaks), c)

    # Integrals and norms

    def integrals(self):
        """Signed integral of each component over [0, 1]"""
        anti = self._pp.antiderivative()
        return anti(1.0) - anti(0.0)

    def cell_averages(self, n_cells):
        """Exact averages over n_cells uniform cells, shape (n_cells, ncomp)"""
        anti = self._pp.antiderivative()
        edges = np.linspace(0.0, 1.0, n_cells + 1)
        values = anti(edges)
        return np.diff(values, axis=0) * n_cells

    def component_norms(self, p=1):
        """(integral of |f_j|^p) for each component, before the p-th root"""

        widths = np.diff(self.breakpoints)
        asc = self.coefficients[::-1]
        totals = np.zeros(self.ncomp)
        nodes, weights = np.polynomial.legendre.leggauss(32)

        for i, h in enumerate(widths):
            for j in range(self.ncomp):
                a = asc[:, i, j]
                if p == 2:
                    sq = P.polymul(a, np.conj(a)).real
                    totals[j] += P.polyval(h, P.polyint(sq))
                    continue
                if np.iscomplexobj(a) or p != 1:
                    s = (nodes + 1) * h / 2
                    totals[j] += h / 2 * np.sum(weights * np.abs(P.polyval(s, a)) ** p)
                    continue
                # Split at sign changes so |f| is polynomial on each part
                cuts = [0.0, h]
                nonzero = np.flatnonzero(np.abs(a) > 0)
                if len(nonzero) and nonzero[-1] > 0:
                    roots = P.polyroots(a[:nonzero[-1] + 1])
                    real = roots[np.abs(roots.imag) <= 1e-12].real
                    cuts += [r for r in real if 0.0 < r < h]
                cuts = np.sort(cuts)
                anti = P.polyint(a)
                values = P.polyval(cuts, anti)
                totals[j] += np.sum(np.abs(np.diff(values)))
        return totals

    def norm(self, p=1):
        """L^p norm of the vector function, (sum_j int |f_j|^p)^(1/p)"""
        if p <= 0:
            raise ValueError("p must be positive")
        return float(np.sum(self.component_norms(p)) ** (1.0 / p))


def flip(f, m_plus):
    """
    Reverse the orientation of the J- components

    Parameters:
    -----------
    f : StateFunction
        State (upsilon, varpi) with the J+ block first
    m_plus : int
        Number of J+ components

    Returns:
    --------
    StateFunction
        (upsilon(x), varpi(1 - x))
    """

    if m_plus >= f.ncomp:
        return f
    mask = np.arange(f.ncomp) >= m_plus
    return f.where(mask, f.reflect())
