"""
Closed-form resolvent R(lambda, A) of a unit-speed system

For (lambda - A) u = f with A (upsilon, varpi) = (-upsilon', varpi'):

    upsilon(x) = e^{-lambda x} w+ + int_0^x e^{-lambda (x - s)} f+(s) ds
    varpi(x)   = e^{lambda (x - 1)} w- + int_x^1 e^{lambda (x - s)} f-(s) ds

and the outgoing traces w = (upsilon(0), varpi(1)) solve
w = sum_n (e^{-lambda} B)^n B a with a the incoming local integrals.
"""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from src.config import DEFAULT_TOLERANCES
from src.exceptions import NotUnitSpeed, SeriesDiverges
from src.semigroup.evaluator import Semigroup

logger = logging.getLogger(__name__)

# Below this |lambda u| the closed form cancels; use Gauss-Legendre instead
SMALL_ARGUMENT = 1.0
GAUSS_NODES, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(24)
MAX_SERIES_TERMS = 100000


def _damped_integral(lam, asc, u):
    """
    J(u) = int_0^u e^{-lam (u - s)} q(s) ds and J'(u) for ascending coefficients of q

    Vectorized over u (array) for one polynomial q.
    """

    u = np.asarray(u, dtype=float)
    value = np.zeros(u.shape, dtype=complex)
    slope = np.zeros(u.shape, dtype=complex)
    small = np.abs(lam * u) < SMALL_ARGUMENT

    if np.any(small):
        us = u[small]
        s = (GAUSS_NODES[:, None] + 1.0) * us[None, :] / 2.0
        integrand = np.exp(-lam * (us[None, :] - s)) * P.polyval(s, asc)
        value[small] = np.sum(GAUSS_WEIGHTS[:, None] * integrand, axis=0) * us / 2.0
        slope[small] = P.polyval(us, asc) - lam * value[small]

    if np.any(~small):
        ul = u[~small]
        # S(u) = sum_r (-1)^r q^(r)(u) / lam^(r+1)
        S_u = np.zeros(ul.shape, dtype=complex)
        dS_u = np.zeros(ul.shape, dtype=complex)
        S_0 = 0.0
        derivative = np.asarray(asc, dtype=float)
        r = 0
        while len(derivative) and np.any(derivative):
            sign = (-1.0) ** r / lam ** (r + 1)
            S_u += sign * P.polyval(ul, derivative)
            S_0 += sign * derivative[0]
            nxt = P.polyder(derivative) if len(derivative) > 1 else np.zeros(0)
            if len(nxt):
                dS_u += sign * P.polyval(ul, nxt)
            derivative = nxt
            r += 1
        decay = np.exp(-lam * ul)
        value[~small] = S_u - decay * S_0
        slope[~small] = lam * decay * S_0 + dS_u
    return value, slope


class LocalIntegral:
    """x -> int_0^x e^{-lambda (x - s)} f(s) ds for every component of a StateFunction"""

    def __init__(self, lam, f):
        self.lam = lam
        self.f = f
        self.breakpoints = f.breakpoints
        self.asc = f.coefficients[::-1]
        widths = np.diff(self.breakpoints)
        ncomp = f.ncomp
        self.start = np.zeros((len(widths) + 1, ncomp), dtype=complex)
        for i, h in enumerate(widths):
            for j in range(ncomp):
                value, _ = _damped_integral(lam, self.asc[:, i, j], np.array([h]))
                self.start[i + 1, j] = np.exp(-lam * h) * self.start[i, j] + value[0]

    def evaluate(self, x):
        """Values and x-derivatives, each of shape (len(x), ncomp)"""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.clip(np.searchsorted(self.breakpoints, x, side="right") - 1,
                      0, len(self.breakpoints) - 2)
        values = np.zeros((len(x), self.f.ncomp), dtype=complex)
        slopes = np.zeros_like(values)
        for i in np.unique(idx):
            sel = idx == i
            u = x[sel] - self.breakpoints[i]
            decay = np.exp(-self.lam * u)
            for j in range(self.f.ncomp):
                value, slope = _damped_integral(self.lam, self.asc[:, i, j], u)
                values[sel, j] = decay * self.start[i, j] + value
                slopes[sel, j] = -self.lam * decay * self.start[i, j] + slope
        return values, slopes

    @property
    def total(self):
        return self.start[-1]


@dataclass
class ResolventResult:
    """u = R(lambda, A) f as an exponential-polynomial function"""
    lam: complex
    m_plus: int
    outgoing: np.ndarray
    plus: LocalIntegral
    minus: LocalIntegral
    terms: int

    def _parts(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        mp = self.m_plus
        lam = self.lam
        w_plus, w_minus = self.outgoing[:mp], self.outgoing[mp:]
        a, da = self.plus.evaluate(x)
        b, db = self.minus.evaluate(1.0 - x)
        decay_plus = np.exp(-lam * x)[:, None]
        decay_minus = np.exp(lam * (x - 1.0))[:, None]
        value = np.hstack([decay_plus * w_plus + a[:, :mp], decay_minus * w_minus + b[:, mp:]])
        slope = np.hstack([-lam * decay_plus * w_plus + da[:, :mp],
                           lam * decay_minus * w_minus - db[:, mp:]])
        return value, slope

    def __call__(self, x):
        return self._parts(x)[0]

    def derivative(self, x):
        return self._parts(x)[1]

    def generator_residual(self, f, x):
        """(lambda - A) u - f at the sample positions"""
        value, slope = self._parts(x)
        mp = self.m_plus
        applied = np.hstack([slope[:, :mp], -slope[:, mp:]])
        return self.lam * value + applied - f(np.atleast_1d(x))

    def boundary_residual(self, B):
        """(upsilon(0), varpi(1)) - B (upsilon(1), varpi(0))"""
        mp = self.m_plus
        at0, at1 = self(np.array([0.0]))[0], self(np.array([1.0]))[0]
        outgoing = np.concatenate([at0[:mp], at1[mp:]])
        incoming = np.concatenate([at1[:mp], at0[mp:]])
        return outgoing - B @ incoming


def resolvent_apply(ph, lam, f, tolerances=DEFAULT_TOLERANCES):
    """
    Apply the resolvent by a Neumann series over the boundary matrix

    Parameters:
    -----------
    ph : PortHamiltonian
        Unit-speed system
    lam : complex
        Spectral parameter with ||B|| e^{-Re lambda} < 1
    f : StateFunction
        Right-hand side

    Returns:
    --------
    ResolventResult
        Callable for values, with derivative and residual helpers
    """

    if not ph.is_unit_speed():
        raise NotUnitSpeed("the resolvent formula needs unit velocities")
    lam = complex(lam)
    B = ph.B
    norm = float(np.linalg.norm(B, 2))
    ratio = norm * np.exp(-lam.real)
    if ratio >= 1.0:
        raise SeriesDiverges(
            f"||B|| e^(-Re lambda) = {ratio:.4g} >= 1; choose Re lambda > {np.log(norm):.4g}"
        )

    mp = ph.m_plus
    plus = LocalIntegral(lam, f)
    minus = LocalIntegral(lam, f.reflect())
    # Incoming traces of the local parts: upsilon(1) and varpi(0)
    incoming = np.concatenate([plus.total[:mp], minus.total[mp:]])

    term = B @ incoming
    outgoing = term.copy()
    factor = np.exp(-lam) * B
    scale = max(1.0, float(np.max(np.abs(outgoing))))
    terms = 1
    while np.max(np.abs(term)) > tolerances.series_term * scale and terms < MAX_SERIES_TERMS:
        term = factor @ term
        outgoing = outgoing + term
        terms += 1
    logger.debug("resolvent series at lambda=%s used %d terms", lam, terms)
    return ResolventResult(lam=lam, m_plus=mp, outgoing=outgoing, plus=plus, minus=minus,
                           terms=terms)


def _time_breaks(x, breakpoints, horizon):
    """Times in [0, horizon] where the solution at x can jump"""
    offsets = np.arange(0, int(np.ceil(horizon)) + 2)[:, None]
    shifts = np.concatenate([breakpoints, 1.0 - breakpoints])[None, :]
    times = np.concatenate([(x + offsets - shifts).ravel(),
                            ((1.0 - x) + offsets - shifts).ravel()])
    times = times[(times > 0.0) & (times < horizon)]
    return np.unique(np.concatenate([[0.0, horizon], times]))


def laplace_transform(ph, f, lam, x_samples, horizon=None, tolerances=DEFAULT_TOLERANCES):
    """
    int_0^T e^{-lambda t} G(t) f dt by Gauss-Legendre between solution kinks

    Parameters:
    -----------
    ph : PortHamiltonian
        Unit-speed system
    f : StateFunction
        Initial datum
    lam : complex
        Transform parameter with Re lambda > 0
    x_samples : array-like
        Positions at which the transform is evaluated
    horizon : float, optional
        Truncation time T (default: e^{-Re lambda T} ||B||^T below 1e-13)

    Returns:
    --------
    np.ndarray
        Complex array of shape (len(x_samples), 2m)
    """

    lam = complex(lam)
    if horizon is None:
        growth = max(0.0, np.log(max(np.linalg.norm(ph.B, 2), 1e-300)))
        rate = lam.real - growth
        if rate <= 0:
            raise SeriesDiverges("the Laplace integral does not converge for this lambda")
        horizon = 32.0 * np.log(10.0) / rate

    semigroup = Semigroup(ph, tolerances)
    nodes, weights = np.polynomial.legendre.leggauss(8)
    x_samples = np.atleast_1d(np.asarray(x_samples, dtype=float))
    out = np.zeros((len(x_samples), ph.dimension), dtype=complex)
    for row, x in enumerate(x_samples):
        breaks = _time_breaks(x, f.breakpoints, horizon)
        a, b = breaks[:-1], breaks[1:]
        t = (a[:, None] + (nodes[None, :] + 1.0) * (b - a)[:, None] / 2.0).ravel()
        w = (weights[None, :] * (b - a)[:, None] / 2.0).ravel()
        values = semigroup.evaluate_pairs(f, t, np.full_like(t, x))
        out[row] = np.sum((w * np.exp(-lam * t))[:, None] * values, axis=0)
    return out
