"""
Error metrics between sampled solutions
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from src.exceptions import GridMismatch


@dataclass
class SampledSolution:
    """Values of all components at sample positions x"""
    x: np.ndarray
    values: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values)
        if self.values.ndim == 1:
            self.values = self.values[:, np.newaxis]
        if self.values.shape[0] != len(self.x):
            raise ValueError("one row of values per sample position is required")


@dataclass
class ErrorMetrics:
    """Norms of a difference, overall and per component"""
    p: float
    lp: float
    max: float
    component_lp: list = field(default_factory=list)
    component_max: list = field(default_factory=list)
    labels: tuple = ()

    def as_dict(self):
        return {
            "p": self.p,
            "lp": self.lp,
            "max": self.max,
            "components": {
                (self.labels[i] if i < len(self.labels) else str(i)): {
                    "lp": self.component_lp[i], "max": self.component_max[i]}
                for i in range(len(self.component_lp))
            },
        }


def _as_sampled(solution, x):
    if isinstance(solution, SampledSolution):
        return solution
    if x is None:
        raise ValueError("sample positions are required for plain arrays")
    return SampledSolution(x, solution)


def compare(a, b, p=1, x=None, tol=1e-14):
    """
    Compare two sampled solutions on the same grid

    Parameters:
    -----------
    a, b : SampledSolution or np.ndarray
        Solutions; plain arrays need the shared positions x
    p : float
        Exponent of the grid L^p norm (trapezoid rule in x)
    x : np.ndarray, optional
        Sample positions for plain arrays
    tol : float
        Largest accepted difference between the two position grids

    Returns:
    --------
    ErrorMetrics
    """

    a = _as_sampled(a, x)
    b = _as_sampled(b, x)
    if a.values.shape != b.values.shape:
        raise GridMismatch(f"value shapes differ: {a.values.shape} vs {b.values.shape}")
    if len(a.x) != len(b.x) or np.max(np.abs(a.x - b.x), initial=0.0) > tol:
        raise GridMismatch("solutions are sampled at different positions")
    if p <= 0:
        raise ValueError("p must be positive")

    difference = np.abs(a.values - b.values)
    component_max = np.max(difference, axis=0, initial=0.0)
    if len(a.x) > 1:
        integrals = trapezoid(difference ** p, a.x, axis=0)
    else:
        integrals = (difference ** p)[0]
    component_lp = integrals ** (1.0 / p)
    return ErrorMetrics(
        p=p,
        lp=float(np.sum(integrals) ** (1.0 / p)),
        max=float(np.max(component_max, initial=0.0)),
        component_lp=[float(v) for v in component_lp],
        component_max=[float(v) for v in component_max],
        labels=tuple(a.labels or b.labels),
    )
