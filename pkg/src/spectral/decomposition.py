"""
Spectral decomposition of the boundary matrix

B = sum_i (lambda_i Pi_i + N_i) with spectral projections Pi_i onto the
generalized eigenspaces and nilpotent parts N_i = (B - lambda_i I) Pi_i.
Projections come from invariant-subspace bases of B and of B^T obtained by
reordered complex Schur forms, so defective eigenvalues need no Jordan
chains.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.special import comb

from src.config import DEFAULT_TOLERANCES
from src.exceptions import ClusterAmbiguity

logger = logging.getLogger(__name__)


def _single_linkage(values, radius):
    """Group points whose chained distances stay below radius"""
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= radius:
                parent[find(i)] = find(j)

    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _is_single_eigenvalue(B, center, size, scale, tol):
    """True when (B - center I)^size has a null space of dimension size"""
    shifted = np.linalg.matrix_power(B - center * np.eye(B.shape[0]), size)
    singular = linalg.svdvals(shifted)
    return bool(np.all(singular[-size:] <= tol * scale ** size))


def cluster_eigenvalues(B, tolerances=DEFAULT_TOLERANCES):
    """
    Distinct eigenvalues with algebraic multiplicities

    Parameters:
    -----------
    B : np.ndarray
        Square matrix
    tolerances : Tolerances
        spectral_cluster sets the merge radius relative to ||B||,
        defect_merge the radius inside which split defective eigenvalues
        are recombined

    Returns:
    --------
    list of (complex, int)
        Cluster centres (means) and sizes
    """

    values = linalg.eigvals(B)
    scale = max(1.0, np.linalg.norm(B, 2))
    base = _single_linkage(values, tolerances.spectral_cluster * scale)

    # Eigenvalues of a Jordan block scatter on a small circle; try to recombine
    centers = [np.mean(values[g]) for g in base]
    coarse = _single_linkage(np.array(centers), tolerances.defect_merge * scale)

    clusters = []
    for group in coarse:
        members = [i for g in group for i in base[g]]
        if len(group) > 1:
            center = np.mean(values[members])
            if _is_single_eigenvalue(B, center, len(members), scale,
                                     tolerances.spectral_cluster * 1e-2):
                clusters.append(members)
                continue
            clusters.extend(base[g] for g in group)
        else:
            clusters.append(members)

    result = [(complex(np.mean(values[c])), len(c)) for c in clusters]
    for i in range(len(result)):
        for j in range(i + 1, len(result)):
            gap = abs(result[i][0] - result[j][0])
            if gap <= 10 * tolerances.spectral_cluster * scale:
                raise ClusterAmbiguity(
                    f"eigenvalues {result[i][0]:.10g} and {result[j][0]:.10g} are "
                    f"{gap:.2e} apart; cannot tell whether they coincide"
                )
    return result


def _invariant_basis(A, center, radius, size):
    """Orthonormal basis of the invariant subspace for eigenvalues near center"""
    _, Z, sdim = linalg.schur(A.astype(complex), output="complex",
                              sort=lambda z: abs(z - center) <= radius)
    if sdim != size:
        raise ClusterAmbiguity(
            f"Schur reordering selected {sdim} eigenvalues near {center:.6g}, expected {size}"
        )
    return Z[:, :size]


def _materialize(matrix, scale, tol):
    """Real part when the imaginary residue is negligible"""
    if np.iscomplexobj(matrix) and np.max(np.abs(matrix.imag), initial=0.0) <= tol * scale:
        return matrix.real.copy()
    return matrix


@dataclass
class SpectralDecomposition:
    """Eigenvalues, projections and nilpotent parts of a square matrix"""

    B: np.ndarray
    eigenvalues: np.ndarray
    multiplicities: tuple
    projections: tuple
    nilpotents: tuple
    right_bases: tuple
    left_bases: tuple
    m_plus: int
    tolerances: object = DEFAULT_TOLERANCES
    residuals: dict = field(default_factory=dict)
    _nilpotent_powers: dict = field(default_factory=dict, repr=False)

    @property
    def k(self):
        return len(self.eigenvalues)

    @property
    def dimension(self):
        return self.B.shape[0]

    @property
    def scale(self):
        return max(1.0, float(np.linalg.norm(self.B, 2)))

    def is_semisimple(self, i):
        if self.multiplicities[i] == 1:
            return True
        bound = self.tolerances.spectral_identity * self.scale * self._projection_scale()
        return bool(np.max(np.abs(self.nilpotents[i])) <= bound)

    def _projection_scale(self):
        return max(1.0, max(np.max(np.abs(P)) for P in self.projections))

    def nilpotent_power(self, i, r):
        """N_i^r Pi_i"""
        key = (i, r)
        if key not in self._nilpotent_powers:
            if r == 0:
                value = self.projections[i]
            else:
                value = self.nilpotents[i] @ self.nilpotent_power(i, r - 1)
            self._nilpotent_powers[key] = value
        return self._nilpotent_powers[key]

    def projection(self, indices=None):
        """Sum of Pi_i over the selected eigenvalues"""
        indices = range(self.k) if indices is None else indices
        total = np.zeros(self.B.shape, dtype=complex)
        for i in indices:
            total = total + self.projections[i]
        return _materialize(total, 1.0, self.tolerances.imaginary_residue)

    def power(self, n, indices=None):
        """
        B^n restricted to selected eigenvalues via the binomial expansion

        Parameters:
        -----------
        n : int
            Nonnegative exponent
        indices : iterable of int, optional
            Eigenvalue indices to keep (default: all)

        Returns:
        --------
        np.ndarray
            sum_j sum_{r < alpha_j, r <= n} C(n, r) lambda_j^(n-r) N_j^r Pi_j,
            real when the selection is closed under conjugation
        """

        if n < 0:
            raise ValueError("negative matrix power")
        indices = range(self.k) if indices is None else indices
        total = np.zeros(self.B.shape, dtype=complex)
        for j in indices:
            lam = self.eigenvalues[j]
            for r in range(min(self.multiplicities[j], n + 1)):
                term = self.nilpotent_power(j, r)
                if r > 0 and not np.any(term):
                    break
                total = total + comb(n, r, exact=True) * lam ** (n - r) * term
        magnitude = max(1.0, float(np.max(np.abs(total))))
        return _materialize(total, magnitude, self.tolerances.imaginary_residue)

    def family(self, indices=None):
        """Matrix family n -> power(n, indices) with memoization"""
        indices = None if indices is None else tuple(indices)
        cache = {}

        def member(n):
            if n not in cache:
                cache[n] = self.power(n, indices)
            return cache[n]

        return member


def spectral_decompose(B, m_plus=None, tolerances=DEFAULT_TOLERANCES):
    """
    Spectral decomposition of B with verified projection identities

    Parameters:
    -----------
    B : array-like
        Square matrix
    m_plus : int, optional
        Size of the J+ block when B is a boundary matrix (default: all)
    tolerances : Tolerances
        Numerical thresholds

    Returns:
    --------
    SpectralDecomposition
        Eigenvalues sorted by decreasing modulus, then by argument

    Raises:
    -------
    ClusterAmbiguity
        When two eigenvalues can be neither separated nor merged reliably
    """

    B = np.asarray(B)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("B must be square")
    n = B.shape[0]
    m_plus = n if m_plus is None else m_plus
    scale = max(1.0, float(np.linalg.norm(B, 2)))

    clusters = cluster_eigenvalues(B, tolerances)
    clusters.sort(key=lambda c: (-round(abs(c[0]), 12), round(np.angle(c[0]) % (2 * np.pi), 12)))
    centers = np.array([c for c, _ in clusters])

    eigenvalues, multiplicities, projections, nilpotents = [], [], [], []
    rights, lefts = [], []
    for i, (center, size) in enumerate(clusters):
        others = np.delete(centers, i)
        separation = np.min(np.abs(others - center)) if len(others) else np.inf
        radius = min(separation / 2, tolerances.defect_merge * scale * 10) if len(others) \
            else np.inf

        E = _invariant_basis(B, center, radius, size)
        F = _invariant_basis(B.T, center, radius, size)
        coupling = F.T @ E
        projection = E @ np.linalg.solve(coupling, F.T)
        lam = np.trace(B @ projection) / size
        nilpotent = (B - lam * np.eye(n)) @ projection
        if size > 1:
            # Neither clearly semisimple nor clearly a Jordan block
            defect = float(np.max(np.abs(nilpotent)))
            pscale = max(1.0, float(np.max(np.abs(projection))))
            if tolerances.spectral_identity * scale * pscale < defect \
                    <= tolerances.defect_merge * scale:
                raise ClusterAmbiguity(
                    f"{size} eigenvalues near {center:.10g} nearly coincide "
                    f"(nilpotent part {defect:.2e}); cannot tell whether they are equal"
                )

        eigenvalues.append(complex(lam))
        multiplicities.append(size)
        projections.append(projection)
        nilpotents.append(nilpotent)
        rights.append(E)
        lefts.append(F @ np.linalg.inv(coupling).T)

    sd = SpectralDecomposition(
        B=B.astype(float) if not np.iscomplexobj(B) else B,
        eigenvalues=np.array(eigenvalues),
        multiplicities=tuple(multiplicities),
        projections=tuple(projections),
        nilpotents=tuple(nilpotents),
        right_bases=tuple(rights),
        left_bases=tuple(lefts),
        m_plus=m_plus,
        tolerances=tolerances,
    )
    sd.residuals = verify_decomposition(sd)
    logger.debug("spectral decomposition: %d distinct eigenvalues, residuals %s",
                 sd.k, sd.residuals)
    return sd


def verify_decomposition(sd):
    """
    Check the projection identities and return their residuals

    Raises ClusterAmbiguity when a residual exceeds its tolerance, which
    happens when clusters were split or merged wrongly.
    """

    n = sd.dimension
    I = np.eye(n)
    B = sd.B
    scale = sd.scale
    pscale = sd._projection_scale()
    tol = sd.tolerances.spectral_identity

    total = sum(sd.projections)
    residuals = {"resolution": float(np.max(np.abs(total - I)))}

    orthogonality = 0.0
    commutation = 0.0
    nilpotency = 0.0
    for i, Pi in enumerate(sd.projections):
        for j, Pj in enumerate(sd.projections):
            target = Pi if i == j else 0.0
            orthogonality = max(orthogonality, float(np.max(np.abs(Pi @ Pj - target))))
        commutation = max(commutation, float(np.max(np.abs(B @ Pi - Pi @ B))))
        power = np.linalg.matrix_power(sd.nilpotents[i], sd.multiplicities[i])
        nilpotency = max(nilpotency,
                         float(np.max(np.abs(power))) / scale ** sd.multiplicities[i])
    residuals.update(orthogonality=orthogonality, commutation=commutation,
                     nilpotency=nilpotency)

    limits = {
        "resolution": tol * pscale,
        "orthogonality": tol * pscale ** 2,
        "commutation": tol * scale * pscale,
        "nilpotency": tol * pscale,
    }
    failed = [name for name, value in residuals.items() if value > limits[name]]
    if failed:
        raise ClusterAmbiguity(
            "spectral identities violated (" + ", ".join(
                f"{name}={residuals[name]:.2e}" for name in failed) + ")"
        )
    return residuals


def power_expansion(sd, n):
    """B^n from the spectral decomposition"""
    return sd.power(n)


def projector_norm(projection, p=1):
    """Induced matrix p-norm (p in {1, 2, inf})"""
    return float(np.linalg.norm(projection, ord=p))


def rank_one_estimate(sd, i):
    """||F||_inf ||E||_1 / |F . E| for a simple eigenvalue"""
    if sd.multiplicities[i] != 1:
        return None
    E = sd.right_bases[i][:, 0]
    F = sd.left_bases[i][:, 0]
    return float(np.max(np.abs(F)) * np.sum(np.abs(E)) / abs(F @ E))
