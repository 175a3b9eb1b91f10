"""
Long-time behaviour: classification, decay bounds and the split G = G1 + G2

G1 is generated by the peripheral eigenvalues (modulus one) of the boundary
matrix, G2 by all others. For a strictly contractive remainder the constant
returned by stable_bound controls ||G2(t)||.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.config import DEFAULT_TOLERANCES
from src.semigroup.evaluator import CharacteristicEvaluator
from src.semigroup.state_function import flip
from src.spectral.decomposition import projector_norm, rank_one_estimate

logger = logging.getLogger(__name__)

UNIFORMLY_STABLE = "uniformly_stable"
PERIODIC_LIMIT = "periodic_limit"
MIXED_NONPERIODIC = "mixed_nonperiodic"
UNSTABLE = "unstable"

# Iteration cap for the sup over n in the bound constants
MAX_BOUND_STEPS = 100000


@dataclass
class StableBound:
    """Constants of the estimate ||G2(t) f|| <= envelope * lambda_bar^t ||f||"""
    lambda_bar: float
    M: float
    projector_sum: float
    envelope: float
    constants: list = field(default_factory=list)
    rank_one: list = field(default_factory=list)
    p: float = 1

    @property
    def decay_rate(self):
        return float(np.log(self.lambda_bar)) if self.lambda_bar > 0 else float("-inf")


@dataclass
class AsymptoticsReport:
    """Classification of the long-time behaviour of the semigroup"""
    classification: str
    period: int = None
    peripheral: list = field(default_factory=list)
    stable: list = field(default_factory=list)
    unstable: list = field(default_factory=list)
    spectral_radius: float = 0.0
    growth: bool = False
    bound: StableBound = None
    projector_norms: list = field(default_factory=list)

    @property
    def lambda_bar(self):
        return None if self.bound is None else self.bound.lambda_bar

    @property
    def decay_rate(self):
        return None if self.bound is None else self.bound.decay_rate

    @property
    def M(self):
        return None if self.bound is None else self.bound.M


def split_spectrum(sd, tolerances=DEFAULT_TOLERANCES):
    """Indices of peripheral, stable and unstable eigenvalues"""
    moduli = np.abs(sd.eigenvalues)
    tol = tolerances.peripheral
    peripheral = [i for i, r in enumerate(moduli) if abs(r - 1.0) <= tol]
    unstable = [i for i, r in enumerate(moduli) if r > 1.0 + tol]
    stable = [i for i, r in enumerate(moduli) if r < 1.0 - tol]
    return peripheral, stable, unstable


def find_period(sd, peripheral, tolerances=DEFAULT_TOLERANCES):
    """
    Minimal d such that the peripheral eigenvalues are exactly the d-th roots of unity

    Returns:
    --------
    int or None
        d, or None when the peripheral set is defective or not a full set
        of roots of unity
    """

    if not peripheral:
        return None
    if not all(sd.is_semisimple(i) for i in peripheral):
        return None
    values = sd.eigenvalues[peripheral]
    for d in range(1, 2 * sd.dimension + 1):
        if np.all(np.abs(values ** d - 1.0) <= tolerances.root_of_unity):
            return d if len(values) == d else None
    return None


def stable_bound(sd, p=1, lambda_bar=None, indices=None, tolerances=DEFAULT_TOLERANCES):
    """
    Decay constants of the stable part

    Parameters:
    -----------
    sd : SpectralDecomposition
        Decomposition of B
    p : float
        Matrix norm exponent (1, 2 or inf)
    lambda_bar : float, optional
        Decay base in [max |lambda_j|, 1), strictly above max |lambda_j| when a
        stable eigenvalue is defective; default max |lambda_j| for a semisimple
        stable part, (1 + max |lambda_j|) / 2 otherwise
    indices : list of int, optional
        Stable eigenvalues (default: all with modulus below one)

    Returns:
    --------
    StableBound
        M = lambda_bar * sum C_j, the projector sum, the envelope
        sum C_j / lambda_bar, and the per-eigenvalue constants
        C_j = sup_n lambda_bar^-n |B^n Pi_j|_p
    """

    if indices is None:
        _, indices, _ = split_spectrum(sd, tolerances)
    if not indices:
        raise ValueError("the stable part of the spectrum is empty")

    radius = float(max(abs(sd.eigenvalues[j]) for j in indices))
    semisimple = all(sd.is_semisimple(j) for j in indices)
    if lambda_bar is None:
        lambda_bar = radius if semisimple and radius > 0 else (1.0 + radius) / 2.0
    if not (0.0 < lambda_bar < 1.0) or lambda_bar < radius:
        raise ValueError(f"lambda_bar must lie in [{radius:.6g}, 1), got {lambda_bar}")
    if not semisimple and lambda_bar <= radius:
        # n^k (radius / lambda_bar)^n is unbounded at equality
        raise ValueError(
            f"a stable eigenvalue is defective; lambda_bar must exceed {radius:.6g}, "
            f"got {lambda_bar}"
        )

    B = sd.B / lambda_bar
    constants, rank_one = [], []
    for j in indices:
        current = sd.projections[j]
        best = projector_norm(current, p)
        previous = best
        flat = 0
        n = 0
        while n < MAX_BOUND_STEPS:
            current = B @ current
            n += 1
            value = projector_norm(current, p)
            best = max(best, value)
            flat = flat + 1 if value <= previous * (1 + 1e-12) else 0
            previous = value
            if n >= sd.multiplicities[j] and flat >= sd.multiplicities[j] + 1:
                break
        else:
            logger.warning("bound constant for eigenvalue %d not settled after %d powers",
                           j, MAX_BOUND_STEPS)
        constants.append(best)
        rank_one.append(rank_one_estimate(sd, j))

    total = float(np.sum(constants))
    return StableBound(
        lambda_bar=float(lambda_bar),
        M=float(lambda_bar * total),
        projector_sum=total,
        envelope=float(total / lambda_bar),
        constants=[float(c) for c in constants],
        rank_one=rank_one,
        p=p,
    )


def classify(sd, p=1, lambda_bar=None, tolerances=DEFAULT_TOLERANCES):
    """
    Classify the long-time behaviour

    Parameters:
    -----------
    sd : SpectralDecomposition
        Decomposition of B
    p : float
        Norm exponent for the bound constants
    lambda_bar : float, optional
        Decay base override for defective stable eigenvalues
    tolerances : Tolerances
        Numerical thresholds

    Returns:
    --------
    AsymptoticsReport
    """

    peripheral, stable, unstable = split_spectrum(sd, tolerances)
    radius = float(np.max(np.abs(sd.eigenvalues))) if sd.k else 0.0
    norms = [projector_norm(P, p) for P in sd.projections]
    growth = any(not sd.is_semisimple(i) for i in peripheral)
    period = None

    if unstable:
        classification = UNSTABLE
    elif not peripheral:
        classification = UNIFORMLY_STABLE
    else:
        period = find_period(sd, peripheral, tolerances)
        if period is not None:
            classification = PERIODIC_LIMIT
        else:
            classification = MIXED_NONPERIODIC
            logger.warning(
                "peripheral eigenvalues %s are not a full semisimple set of roots of "
                "unity; the limit semigroup is not periodic%s",
                np.round(sd.eigenvalues[peripheral], 10),
                " and grows polynomially" if growth else "",
            )

    bound = stable_bound(sd, p, lambda_bar, stable, tolerances) if stable else None
    return AsymptoticsReport(
        classification=classification,
        period=period,
        peripheral=peripheral,
        stable=stable,
        unstable=unstable,
        spectral_radius=radius,
        growth=growth,
        bound=bound,
        projector_norms=norms,
    )


class AsymptoticSplit:
    """
    Evaluators for G1, G2 and any subspace semigroup G^lambda

    Parameters:
    -----------
    sd : SpectralDecomposition
        Decomposition of the boundary matrix of a unit-speed system
    report : AsymptoticsReport, optional
        Classification (computed when omitted)
    """

    def __init__(self, sd, report=None, tolerances=DEFAULT_TOLERANCES):
        self.sd = sd
        self.tolerances = tolerances
        self.report = report if report is not None else classify(sd, tolerances=tolerances)
        peripheral = set(self.report.peripheral)
        self.complement = [i for i in range(sd.k) if i not in peripheral]

    def _engine(self, family):
        return CharacteristicEvaluator(self.sd.m_plus, family, self.sd.dimension,
                                       self.tolerances)

    def limit_family(self):
        """n -> peripheral part of B^n; periodic in n when a period exists"""
        peripheral = self.report.peripheral
        d = self.report.period
        if d is None:
            return self.sd.family(peripheral)
        # Semisimple roots of unity: lambda_j^n depends on n mod d only
        base = self.sd.family(peripheral)
        return lambda n: base(int(n) % d)

    def _require_peripheral(self, empty_ok):
        if not self.report.peripheral and not empty_ok:
            raise ValueError("no peripheral eigenvalues; the limit semigroup is zero")

    def evaluate_limit(self, f0, t, x_samples, empty_ok=False):
        """Sampled G1(t) f0"""
        self._require_peripheral(empty_ok)
        if not self.report.peripheral:
            return np.zeros((len(np.atleast_1d(x_samples)), self.sd.dimension))
        return self._engine(self.limit_family()).evaluate(f0, t, x_samples)

    def limit_state(self, f0, t):
        self._require_peripheral(False)
        return self._engine(self.limit_family()).evaluate_state(f0, t)

    def evaluate_stable(self, f0, t, x_samples):
        """Sampled G2(t) f0 (all non-peripheral eigenvalues)"""
        return self._engine(self.sd.family(self.complement)).evaluate(f0, t, x_samples)

    def stable_state(self, f0, t):
        return self._engine(self.sd.family(self.complement)).evaluate_state(f0, t)

    def evaluate_subspace(self, indices, f0, t, x_samples):
        """Sampled G^lambda(t) f0 for a chosen set of eigenvalue indices"""
        return self._engine(self.sd.family(indices)).evaluate(f0, t, x_samples)

    def peripheral_projection(self, f):
        return projection_state(self.sd, self.report.peripheral, f)

    def stable_projection(self, f):
        return projection_state(self.sd, self.complement, f)


def projection_state(sd, indices, f):
    """Apply V (sum_j Pi_j) V pointwise to a state"""
    P = sd.projection(indices)
    g = flip(flip(f, sd.m_plus).apply_matrix(P), sd.m_plus)
    return g.real if g.is_complex else g


def evaluate_limit(sd, f0, t, x_samples, empty_ok=False):
    return AsymptoticSplit(sd).evaluate_limit(f0, t, x_samples, empty_ok)


def evaluate_stable(sd, f0, t, x_samples):
    return AsymptoticSplit(sd).evaluate_stable(f0, t, x_samples)


def evaluate_subspace(sd, indices, f0, t, x_samples):
    return AsymptoticSplit(sd).evaluate_subspace(indices, f0, t, x_samples)


def peripheral_projection(sd, f):
    return AsymptoticSplit(sd).peripheral_projection(f)


def stable_projection(sd, f):
    return AsymptoticSplit(sd).stable_projection(f)
