"""
Traverse times L_j(x) = int_0^x ds / c_j(s) and the common reference time c

A system whose traverse times L_j(1) are all integer multiples of 1/c can be
rescaled to unit speed by subdividing edge j into l_j = c L_j(1) pieces.
"""

import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from math import lcm

import numpy as np
from numpy.polynomial import Chebyshev
from scipy import integrate

from src.config import DEFAULT_TOLERANCES
from src.exceptions import NonPositiveVelocity, RationalDependenceViolated

logger = logging.getLogger(__name__)

# Chebyshev degrees tried for the antiderivative of 1/c on one piece
FIT_DEGREES = (8, 16, 32, 64, 128, 256)
QUAD_CHECKS = 7
MAX_NEWTON_STEPS = 200


def _fit_slowness_integral(velocity, a, b, tol):
    """Chebyshev antiderivative of 1/c on [a, b], checked against quad"""
    h = b - a
    checks = np.linspace(0.0, h, QUAD_CHECKS + 2)[1:]
    reference = np.array([
        integrate.quad(lambda s: 1.0 / velocity(a + s), 0.0, p, epsabs=tol * 1e-2,
                       epsrel=0.0, limit=200)[0]
        for p in checks
    ])
    for degree in FIT_DEGREES:
        fit = Chebyshev.interpolate(lambda s: 1.0 / velocity(a + s), degree, domain=[0.0, h])
        anti = fit.integ(lbnd=0.0)
        error = float(np.max(np.abs(anti(checks) - reference)))
        if error <= tol:
            return anti
    raise ValueError(
        f"traverse time on [{a:.6g}, {b:.6g}] not resolved to {tol:g} "
        f"(error {error:.2e} at degree {FIT_DEGREES[-1]})"
    )


class TraverseMap:
    """
    Monotone map x -> L(x) for one Riemann component

    Pieces where the velocity is constant or affine are integrated in
    closed form; a polynomial slowness is integrated exactly; any other
    velocity piece uses a Chebyshev antiderivative verified by quadrature.

    Parameters:
    -----------
    profile : VelocityProfile
        Positive velocity of the component
    tolerances : Tolerances
        quadrature bounds the absolute error of the fitted pieces
    """

    def __init__(self, profile, tolerances=DEFAULT_TOLERANCES):
        if not profile.minimum() > 0:
            raise NonPositiveVelocity(f"velocity minimum {profile.minimum():.3g} is not positive")
        self.profile = profile
        self.tolerances = tolerances
        pp = profile.ppoly
        self.breakpoints = np.asarray(pp.x, dtype=float)
        self._pieces = []

        if profile.kind == "slowness":
            anti = pp.antiderivative()
            for i in range(len(self.breakpoints) - 1):
                a = self.breakpoints[i]
                self._pieces.append(("exact", lambda s, a=a, anti=anti: anti(a + s) - anti(a)))
        else:
            for i in range(len(self.breakpoints) - 1):
                a, b = self.breakpoints[i], self.breakpoints[i + 1]
                asc = pp.c[::-1, i]
                nonzero = np.flatnonzero(np.abs(asc) > 0)
                degree = int(nonzero[-1]) if len(nonzero) else 0
                if degree == 0:
                    self._pieces.append(("exact", lambda s, v=asc[0]: s / v))
                elif degree == 1:
                    self._pieces.append(
                        ("exact", lambda s, v=asc[0], w=asc[1]: np.log1p(w * s / v) / w))
                else:
                    fit = _fit_slowness_integral(profile.velocity, a, b, tolerances.quadrature)
                    self._pieces.append(("fitted", fit))

        widths = np.diff(self.breakpoints)
        totals = np.array([float(self._piece(i, np.array([h]))[0])
                           for i, h in enumerate(widths)])
        if np.any(totals <= 0):
            raise NonPositiveVelocity("traverse time is not strictly increasing")
        self.offsets = np.concatenate([[0.0], np.cumsum(totals)])

    def _piece(self, i, s):
        _, evaluate = self._pieces[i]
        return np.asarray(evaluate(s), dtype=float)

    @property
    def total(self):
        """L(1), the time needed to traverse the edge"""
        return float(self.offsets[-1])

    @property
    def is_affine(self):
        return self.profile.is_constant()

    def __call__(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        flat = np.atleast_1d(x)
        idx = np.clip(np.searchsorted(self.breakpoints, flat, side="right") - 1,
                      0, len(self.breakpoints) - 2)
        out = np.empty_like(flat)
        for i in np.unique(idx):
            sel = idx == i
            out[sel] = self.offsets[i] + self._piece(i, flat[sel] - self.breakpoints[i])
        return out.reshape(x.shape)

    def inverse(self, s):
        """
        L^{-1}(s) by safeguarded Newton iteration

        Parameters:
        -----------
        s : array-like
            Times in [0, L(1)]

        Returns:
        --------
        np.ndarray
            Positions x with |x - L^{-1}(s)| below the inverse_map tolerance
        """

        s = np.clip(np.asarray(s, dtype=float), 0.0, self.total)
        flat = np.atleast_1d(s)
        if self.is_affine:
            return np.clip(flat / self.total, 0.0, 1.0).reshape(s.shape)

        lo = np.zeros_like(flat)
        hi = np.ones_like(flat)
        x = flat / self.total
        tol = self.tolerances.inverse_map
        for _ in range(MAX_NEWTON_STEPS):
            residual = self(x) - flat
            hi = np.where(residual > 0, x, hi)
            lo = np.where(residual <= 0, x, lo)
            step = residual * self.profile.velocity(x)
            candidate = x - step
            outside = (candidate <= lo) | (candidate >= hi)
            candidate = np.where(outside, 0.5 * (lo + hi), candidate)
            done = np.max(np.abs(candidate - x)) <= tol
            x = candidate
            if done:
                break
        else:
            logger.warning("inverse traverse map did not converge to %.1e", tol)
        return np.clip(x, 0.0, 1.0).reshape(s.shape)


@dataclass(frozen=True)
class TraverseTimeTable:
    """Traverse maps, totals and (once found) the reference time c with multiples l_j"""
    maps: tuple
    totals: np.ndarray
    c: float = None
    multiples: tuple = None

    @property
    def has_reference(self):
        return self.c is not None

    @property
    def total_length(self):
        """l = sum_j l_j, the dimension of the subdivided system"""
        if self.multiples is None:
            raise ValueError("reference time not determined yet")
        return int(sum(self.multiples))


def traverse_times(ph, tolerances=DEFAULT_TOLERANCES):
    """
    Traverse maps L_j for every Riemann component of a system

    Parameters:
    -----------
    ph : PortHamiltonian
        System with positive velocity profiles
    tolerances : Tolerances
        Quadrature accuracy for non-polynomial slowness

    Returns:
    --------
    TraverseTimeTable
        Without reference time
    """

    maps = tuple(TraverseMap(v, tolerances) for v in ph.velocities)
    totals = np.array([m.total for m in maps])
    logger.debug("traverse times %s", totals)
    return TraverseTimeTable(maps=maps, totals=totals)


def _integrality_defect(c, totals):
    scaled = c * np.asarray(totals)
    return np.abs(scaled - np.round(scaled)), np.round(scaled).astype(int)


def find_reference_time(table, c_hint=None, max_denominator=None,
                        tolerances=DEFAULT_TOLERANCES):
    """
    Smallest c with c L_j(1) a positive integer for all j

    Parameters:
    -----------
    table : TraverseTimeTable
        Traverse times from traverse_times
    c_hint : float, optional
        Candidate reference time to verify instead of searching
    max_denominator : int, optional
        Largest denominator used when rationalizing L_j(1) / L_1(1)

    Returns:
    --------
    TraverseTimeTable
        Copy with c and the multiples l_j filled in
    """

    max_denominator = max_denominator or tolerances.max_denominator
    totals = np.asarray(table.totals, dtype=float)

    if c_hint is not None:
        if not c_hint > 0:
            raise ValueError("reference time must be positive")
        c = float(c_hint)
    else:
        # Ratios to the first traverse time as best rationals p/q
        ratios = [Fraction(float(r)).limit_denominator(max_denominator)
                  for r in totals / totals[0]]
        k = lcm(*[r.denominator for r in ratios])
        c = k / totals[0]

    defect, multiples = _integrality_defect(c, totals)
    if np.any(defect > tolerances.integrality) or np.any(multiples < 1):
        worst = int(np.argmax(defect))
        raise RationalDependenceViolated(
            f"traverse times {np.array2string(totals, precision=12)} have no common "
            f"reference time (c = {c:.12g} leaves component {worst + 1} off an integer by "
            f"{defect[worst]:.2e}); only the characteristics oracle can solve this system"
        )

    multiples = tuple(int(l) for l in multiples)
    if sum(multiples) > 10000:
        logger.warning("subdivided system has dimension %d", sum(multiples))
    logger.info("reference time c = %.12g, multiples %s", c, multiples)
    return replace(table, c=c, multiples=multiples)
