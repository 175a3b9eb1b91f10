"""
Closed-form evaluation of the solution semigroup

A unit-speed system moves every Riemann invariant along its characteristic
at speed one, so the state at time t is a shifted copy of the initial data
multiplied by a power of the boundary matrix. The engine below works for any
matrix family n -> P_n; with P_n = B^n it gives G(t), the spectral module
plugs in the peripheral and stable parts of the power expansion.
"""

import logging
import threading
from collections import OrderedDict

import numpy as np
from joblib import Parallel, delayed

from src.config import DEFAULT_TOLERANCES, NETWAVE_THREADS
from src.exceptions import NotUnitSpeed
from src.semigroup.state_function import StateFunction, flip

logger = logging.getLogger(__name__)

# Sample counts above this are split across joblib workers
PARALLEL_CHUNK = 20000

# Memoized matrix powers per cache, on top of the repeated squares
POWER_CACHE_SIZE = 512


class MatrixPowerCache:
    """
    B^n by repeated squaring

    The squares B^(2^k) are kept for good; at most max_size recent powers
    are memoized on top of them, oldest evicted first. Safe to share
    between threads.
    """

    def __init__(self, B, max_size=POWER_CACHE_SIZE):
        B = np.asarray(B)
        self._identity = np.eye(B.shape[0], dtype=B.dtype)
        self._squares = [B.copy()]
        self._powers = OrderedDict()
        self.max_size = max(int(max_size), 1)
        self._lock = threading.Lock()

    @property
    def B(self):
        return self._squares[0]

    @property
    def size(self):
        """Number of memoized powers"""
        return len(self._powers)

    def __call__(self, n):
        return self.power(n)

    def power(self, n):
        n = int(n)
        if n < 0:
            raise ValueError("negative matrix power")
        if n == 0:
            return self._identity

        with self._lock:
            cached = self._powers.get(n)
            if cached is not None:
                self._powers.move_to_end(n)
                return cached
            while (1 << len(self._squares)) <= n:
                self._squares.append(self._squares[-1] @ self._squares[-1])
            result = self._identity
            bit = 0
            m = n
            while m:
                if m & 1:
                    result = result @ self._squares[bit]
                m >>= 1
                bit += 1
            self._powers[n] = result
            if len(self._powers) > self.max_size:
                self._powers.popitem(last=False)
            logger.debug("cached B^%d (%d powers held)", n, len(self._powers))
        return result


def resolve_shift(t, y, snap):
    """
    Shift index and argument along the characteristic

    Parameters:
    -----------
    t : np.ndarray
        Times
    y : np.ndarray
        Positions in transport coordinates (x for J+, 1 - x for J-)
    snap : float
        Distances to an integer below this count as exact hits

    Returns:
    --------
    tuple of (np.ndarray, np.ndarray)
        n with 0 <= n - t + y < 1 (right-continuous choice) and theta
    """

    d = np.asarray(t, dtype=float) - np.asarray(y, dtype=float)
    nearest = np.round(d)
    d = np.where(np.abs(d - nearest) <= snap, nearest, d)
    n = np.maximum(np.ceil(d), 0.0)
    theta = n - d
    return n.astype(int), theta


class CharacteristicEvaluator:
    """Evaluate x -> (V S(t) V f)(x) for the family S(t)g(x) = P_n g(n - t + x)"""

    def __init__(self, m_plus, family, dimension, tolerances=DEFAULT_TOLERANCES,
                 n_jobs=NETWAVE_THREADS):
        self.m_plus = m_plus
        self.family = family
        self.dimension = dimension
        self.tolerances = tolerances
        self.n_jobs = n_jobs

    def _transported(self, f, theta):
        """g(theta) = (V f)(theta) = (upsilon(theta), varpi(1 - theta))"""
        mp = self.m_plus
        values = f(theta)
        if mp < self.dimension:
            values = values.copy()
            values[..., mp:] = f(1.0 - theta)[..., mp:]
        return values

    def _block(self, f, t, y, rows):
        n, theta = resolve_shift(t, y, self.tolerances.time_snap)
        g = self._transported(f, theta)
        out = None
        for k in np.unique(n):
            sel = n == k
            P = np.asarray(self.family(int(k)))[rows]
            values = g[sel] @ P.T
            if out is None:
                out = np.zeros((len(y), P.shape[0]), dtype=values.dtype)
            elif np.iscomplexobj(values) and not np.iscomplexobj(out):
                out = out.astype(complex)
            out[sel] = values
        return out

    def _pairs(self, f, t, x):
        mp, dim = self.m_plus, self.dimension
        parts = []
        if mp > 0:
            parts.append(self._block(f, t, x, slice(0, mp)))
        if mp < dim:
            parts.append(self._block(f, t, 1.0 - x, slice(mp, dim)))
        dtype = np.result_type(*[p.dtype for p in parts])
        return np.concatenate([p.astype(dtype) for p in parts], axis=1)

    def evaluate_pairs(self, f, t, x):
        """
        Values at matching arrays of times and positions

        Parameters:
        -----------
        f : StateFunction
            Initial datum (upsilon, varpi)
        t : array-like
            Times, t >= 0
        x : array-like
            Positions in [0, 1], same length as t

        Returns:
        --------
        np.ndarray
            Shape (len(x), dimension)
        """

        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t, x = np.broadcast_arrays(t, x)
        if np.any(t < 0):
            raise ValueError("time must be nonnegative")
        if f.ncomp != self.dimension:
            raise ValueError(f"state has {f.ncomp} components, system has {self.dimension}")

        if self.n_jobs > 1 and len(x) > PARALLEL_CHUNK:
            chunks = np.array_split(np.arange(len(x)), self.n_jobs)
            parts = Parallel(n_jobs=self.n_jobs, prefer="threads")(
                delayed(self._pairs)(f, t[c], x[c]) for c in chunks
            )
            return np.concatenate(parts, axis=0)
        return self._pairs(f, t, x)

    def evaluate(self, f, t, x_samples):
        """Sampled solution at one time"""
        x = np.atleast_1d(np.asarray(x_samples, dtype=float))
        return self.evaluate_pairs(f, np.full_like(x, float(t)), x)

    def evaluate_state(self, f, t):
        """
        Exact solution at time t as a StateFunction

        With N = floor(t) and tau = t - N the transported datum g = V f is
        mapped to P_{N+1} g(x + 1 - tau) on [0, tau) and P_N g(x - tau) on
        [tau, 1).
        """

        if t < 0:
            raise ValueError("time must be nonnegative")
        snap = self.tolerances.time_snap
        N = int(round(t)) if abs(t - round(t)) <= snap else int(np.floor(t))
        tau = max(t - N, 0.0) if abs(t - N) > snap else 0.0

        g = flip(f, self.m_plus)
        segments = []
        if tau > 0.0:
            breaks, c = g.restrict_shift(0.0, tau, 1.0 - tau)
            P = np.asarray(self.family(N + 1))
            segments.append((breaks, np.einsum("dkj,ij->dki", c, P)))
        breaks, c = g.restrict_shift(tau, 1.0, -tau)
        P = np.asarray(self.family(N))
        segments.append((breaks, np.einsum("dkj,ij->dki", c, P)))

        result = StateFunction.from_segments(segments, self.dimension, g._max_degree)
        return flip(result, self.m_plus)


class Semigroup:
    """
    Solution semigroup G(t) of a unit-speed port-Hamiltonian

    Parameters:
    -----------
    ph : PortHamiltonian
        System with all velocities equal to one
    tolerances : Tolerances
        Numerical thresholds
    """

    def __init__(self, ph, tolerances=DEFAULT_TOLERANCES):
        if not ph.is_unit_speed():
            raise NotUnitSpeed(
                "velocities are not all 1; subdivide the system with the "
                "normalization package first"
            )
        self.ph = ph
        self.tolerances = tolerances
        self.powers = MatrixPowerCache(ph.B)
        self.engine = CharacteristicEvaluator(ph.m_plus, self.powers, ph.dimension, tolerances)

    @property
    def m_plus(self):
        return self.ph.m_plus

    def evaluate(self, f0, t, x_samples):
        return self.engine.evaluate(f0, t, x_samples)

    def evaluate_pairs(self, f0, t, x):
        return self.engine.evaluate_pairs(f0, t, x)

    def evaluate_state(self, f0, t):
        return self.engine.evaluate_state(f0, t)

    def integer_action(self, f0, n):
        """G(n) f = V B^n V f"""
        return flip(flip(f0, self.m_plus).apply_matrix(self.powers(n)), self.m_plus)


def evaluate_semigroup(ph, f0, t, x_samples, tolerances=DEFAULT_TOLERANCES):
    """
    Sampled G(t) f0 for a unit-speed system

    Parameters:
    -----------
    ph : PortHamiltonian
        Unit-speed system
    f0 : StateFunction
        Initial datum with 2m components
    t : float
        Time, t >= 0
    x_samples : array-like
        Positions in [0, 1)

    Returns:
    --------
    np.ndarray
        Shape (len(x_samples), 2m)
    """

    return Semigroup(ph, tolerances).evaluate(f0, t, x_samples)


def evaluate_transport(B, f0, t, x_samples, tolerances=DEFAULT_TOLERANCES):
    """Sampled S(t) f0 with S(t) f(x) = B^n f(n - t + x)"""
    B = np.asarray(B)
    engine = CharacteristicEvaluator(B.shape[0], MatrixPowerCache(B), B.shape[0], tolerances)
    return engine.evaluate(f0, t, x_samples)


def transport_state(B, f0, t, tolerances=DEFAULT_TOLERANCES):
    """S(t) f0 as a StateFunction"""
    B = np.asarray(B)
    engine = CharacteristicEvaluator(B.shape[0], MatrixPowerCache(B), B.shape[0], tolerances)
    return engine.evaluate_state(f0, t)


def semigroup_property_check(ph, f0, t, s, x_samples=None, p=None,
                             tolerances=DEFAULT_TOLERANCES):
    """
    Deviation between G(t + s) f0 and G(t) G(s) f0

    Parameters:
    -----------
    ph : PortHamiltonian
        Unit-speed system
    f0 : StateFunction
        Initial datum
    t, s : float
        Nonnegative times
    x_samples : array-like, optional
        Sample positions for the max deviation (default: 512 uniform points)
    p : float, optional
        If given, return the exact L^p norm of the difference instead

    Returns:
    --------
    float
        Maximum sampled deviation, or the L^p deviation
    """

    if t < 0 or s < 0:
        raise ValueError("times must be nonnegative")
    semigroup = Semigroup(ph, tolerances)
    intermediate = semigroup.evaluate_state(f0, s)
    if p is not None:
        composed = semigroup.evaluate_state(intermediate, t)
        direct = semigroup.evaluate_state(f0, t + s)
        return (composed - direct).norm(p)

    if x_samples is None:
        x_samples = (np.arange(512) + 0.5) / 512
    composed = semigroup.evaluate(intermediate, t, x_samples)
    direct = semigroup.evaluate(f0, t + s, x_samples)
    return float(np.max(np.abs(composed - direct)))
