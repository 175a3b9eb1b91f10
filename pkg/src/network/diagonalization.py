"""
Diagonalize per-edge systems into Riemann invariants

For every edge the matrix function M(x) is eigen-decomposed at Chebyshev-
Lobatto nodes of each breakpoint interval, eigenbranches are continued from
node to node, and eigenvalues, diagonalizer F(x) and its inverse are fitted
back to piecewise polynomials.
"""

import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from numpy.polynomial import polynomial as P
from scipy import linalg
from scipy.interpolate import PPoly
from scipy.optimize import linear_sum_assignment

from src.config import DEFAULT_TOLERANCES, NETWAVE_THREADS
from src.exceptions import NonDiagonalizable, SignChange, ZeroEigenvalue
from src.network.graph import VelocityProfile

logger = logging.getLogger(__name__)

DEFAULT_NODES = 9


def chebyshev_lobatto(a, b, n):
    """n Chebyshev-Lobatto nodes on [a, b], endpoints included, ascending"""
    if n < 2:
        return np.array([a, b], dtype=float)
    k = np.arange(n)
    return a + (b - a) * (1.0 - np.cos(np.pi * k / (n - 1))) / 2.0


def _rref(A, tol):
    """Reduced row echelon form with partial pivoting"""

    R = np.array(A, dtype=float)
    rows, cols = R.shape
    pivot_row = 0
    for col in range(cols):
        if pivot_row >= rows:
            break
        best = pivot_row + int(np.argmax(np.abs(R[pivot_row:, col])))
        if abs(R[best, col]) <= tol:
            R[pivot_row:, col] = 0.0
            continue
        R[[pivot_row, best]] = R[[best, pivot_row]]
        R[pivot_row] /= R[pivot_row, col]
        for r in range(rows):
            if r != pivot_row:
                R[r] -= R[r, col] * R[pivot_row]
        pivot_row += 1
    return R[:pivot_row]


def _normalize(vector):
    """Unit Euclidean norm with the first nonzero entry positive"""
    vector = vector / np.linalg.norm(vector)
    nonzero = np.flatnonzero(np.abs(vector) > 1e-12)
    if len(nonzero) and vector[nonzero[0]] < 0:
        vector = -vector
    return vector


def eigensystem(matrix, tolerances=DEFAULT_TOLERANCES):
    """
    Real eigenvalues and a canonical eigenvector basis of one matrix

    Parameters:
    -----------
    matrix : np.ndarray
        Square real matrix
    tolerances : Tolerances
        Thresholds for clustering and rank decisions

    Returns:
    --------
    tuple of (np.ndarray, np.ndarray)
        Eigenvalues sorted ascending and the matching eigenvectors as
        columns. Each eigenspace basis is the reduced row echelon basis
        scaled to unit norm with its first nonzero entry positive. Equal
        eigenvalues are ordered by their eigenvectors in descending
        lexicographic order (entries rounded to 12 decimals), so e_1
        comes before e_2. This fixes the Riemann component order.
    """

    k = matrix.shape[0]
    scale = max(1.0, float(np.max(np.abs(matrix))))
    values = linalg.eigvals(matrix)
    if np.max(np.abs(values.imag)) > tolerances.eigen_cluster * scale:
        raise NonDiagonalizable("matrix has non-real eigenvalues")

    values = np.sort(values.real)
    groups = [[values[0]]]
    for v in values[1:]:
        if v - groups[-1][-1] <= tolerances.eigen_cluster * scale:
            groups[-1].append(v)
        else:
            groups.append([v])

    pairs = []
    for group in groups:
        lam = float(np.mean(group))
        basis = linalg.null_space(matrix - lam * np.eye(k), rcond=tolerances.eigen_cluster)
        if basis.shape[1] < len(group):
            raise NonDiagonalizable(
                f"eigenvalue {lam:.6g} has algebraic multiplicity {len(group)} "
                f"but geometric multiplicity {basis.shape[1]}"
            )
        canonical = _rref(basis.T, tolerances.eigen_cluster)[:len(group)]
        vectors = [_normalize(row) for row in canonical]
        vectors.sort(key=lambda v: tuple(np.round(v, 12)), reverse=True)
        pairs.extend((lam, v) for v in vectors)

    eigenvalues = np.array([lam for lam, _ in pairs])
    eigenvectors = np.column_stack([v for _, v in pairs])
    return eigenvalues, eigenvectors


def _match_branches(prev_values, prev_vectors, values, vectors, scale):
    """Continue eigenbranches to the next node by minimal-cost assignment"""

    cost = np.abs(prev_values[:, None] - values[None, :]) / scale
    cost += 1.0 - np.abs(prev_vectors.T @ vectors)
    _, order = linear_sum_assignment(cost)
    values = values[order]
    vectors = vectors[:, order]
    # Keep eigenvectors continuous along the branch
    flip = np.sum(prev_vectors * vectors, axis=0) < 0
    vectors[:, flip] *= -1
    return values, vectors


def _fit_intervals(breakpoints, node_sets, trim):
    """
    Interpolate sampled values on each interval into one PPoly

    node_sets holds, per interval, (nodes, values) with values of shape
    (n, ...). Coefficients below ``trim`` at the top degrees are dropped.
    """

    shape = node_sets[0][1].shape[1:]
    fits = []
    for (nodes, values), a in zip(node_sets, breakpoints[:-1]):
        flat = values.reshape(len(nodes), -1)
        coef = P.polyfit(nodes - a, flat, len(nodes) - 1)
        if coef.ndim == 1:
            coef = coef[:, None]
        degree = coef.shape[0] - 1
        while degree > 0 and np.max(np.abs(coef[degree])) <= trim:
            degree -= 1
        fits.append(coef[:degree + 1])

    degree = max(f.shape[0] for f in fits) - 1
    c = np.zeros((degree + 1, len(fits)) + shape)
    for i, coef in enumerate(fits):
        for r in range(coef.shape[0]):
            c[degree - r, i] = coef[r].reshape(shape)
    return PPoly(c, breakpoints)


@dataclass(frozen=True)
class EdgeDiagonalization:
    """Eigenbranches and diagonalizer of one edge as piecewise polynomials"""

    edge_id: object
    eigenvalues: PPoly
    diagonalizer: PPoly
    inverse: PPoly
    signs: tuple
    residual: float

    @property
    def dimension(self):
        return len(self.signs)

    def eigenvalues_at(self, x):
        return self.eigenvalues(x)

    def F(self, x):
        return self.diagonalizer(x)

    def F_inv(self, x):
        return self.inverse(x)

    def riemann_invariants(self, p, x):
        """u = F(x)^{-1} p"""
        return self.inverse(x) @ np.asarray(p, dtype=float)

    def reconstruct(self, u, x):
        """p = F(x) u"""
        return self.diagonalizer(x) @ np.asarray(u, dtype=float)

    def branch_velocity(self, branch):
        """Speed |lambda_branch(x)| as a velocity profile"""
        c = self.eigenvalues.c[:, :, branch] * self.signs[branch]
        return VelocityProfile(PPoly(c.copy(), self.eigenvalues.x.copy()))


def diagonalize_edge(es, samples=DEFAULT_NODES, tolerances=DEFAULT_TOLERANCES):
    """
    Diagonalize one edge system

    Parameters:
    -----------
    es : EdgeSystem
        Edge system whose M(x) is diagonalized
    samples : int
        Chebyshev-Lobatto nodes per breakpoint interval
    tolerances : Tolerances
        Numerical thresholds

    Returns:
    --------
    EdgeDiagonalization
        Branches sorted ascending by eigenvalue at x = 0
    """

    if samples < 1:
        raise ValueError("samples must be a positive integer")

    breakpoints = np.asarray(es.M.breakpoints, dtype=float)
    n_nodes = max(2, samples)
    scale = max(1.0, es.M.max_abs())

    node_sets = []
    prev = None
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        nodes = chebyshev_lobatto(a, b, n_nodes)
        lam_rows, vec_rows = [], []
        for x in nodes:
            matrix = es.M(x)
            try:
                values, vectors = eigensystem(matrix, tolerances)
            except NonDiagonalizable as exc:
                raise NonDiagonalizable(f"edge {es.edge_id!r} at x={x:.6g}: {exc}") from None
            if prev is not None:
                values, vectors = _match_branches(prev[0], prev[1], values, vectors, scale)
            prev = (values, vectors)
            lam_rows.append(values)
            vec_rows.append(vectors)
        node_sets.append((nodes, np.array(lam_rows), np.array(vec_rows)))

    all_values = np.concatenate([v for _, v, _ in node_sets])
    small = np.abs(all_values) < tolerances.zero_eigenvalue * scale
    if np.any(small):
        node = np.concatenate([n for n, _, _ in node_sets])[np.argwhere(small)[0][0]]
        raise ZeroEigenvalue(f"edge {es.edge_id!r}: eigenvalue vanishes near x={node:.6g}")
    signs = np.sign(all_values[0])
    changed = np.any(np.sign(all_values) != signs, axis=0)
    if np.any(changed):
        raise SignChange(
            f"edge {es.edge_id!r}: branch {int(np.argmax(changed))} changes sign along the edge"
        )

    trim = 1e-2 * tolerances.diagonalization * scale
    eigenvalues = _fit_intervals(breakpoints, [(n, v) for n, v, _ in node_sets], trim)
    diagonalizer = _fit_intervals(breakpoints, [(n, F) for n, _, F in node_sets], trim)
    inverse = _fit_intervals(
        breakpoints, [(n, np.linalg.inv(F)) for n, _, F in node_sets], trim
    )

    residual = 0.0
    for nodes, _, _ in node_sets:
        for x in nodes:
            matrix = es.M(x)
            diag = inverse(x) @ matrix @ diagonalizer(x) - np.diag(eigenvalues(x))
            bound = max(np.max(np.abs(matrix)), np.finfo(float).tiny)
            residual = max(residual, float(np.max(np.abs(diag))) / bound)
    if residual > tolerances.diagonalization:
        raise NonDiagonalizable(
            f"edge {es.edge_id!r}: diagonalization residual {residual:.3g} exceeds tolerance"
        )

    logger.debug("edge %r diagonalized: eigenvalues at 0 %s", es.edge_id, eigenvalues(0.0))
    return EdgeDiagonalization(
        edge_id=es.edge_id,
        eigenvalues=eigenvalues,
        diagonalizer=diagonalizer,
        inverse=inverse,
        signs=tuple(int(s) for s in signs),
        residual=residual,
    )


def diagonalize_edges(systems, samples=DEFAULT_NODES, tolerances=DEFAULT_TOLERANCES,
                      n_jobs=NETWAVE_THREADS):
    """Diagonalize independent edges in parallel, preserving input order"""

    return Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(diagonalize_edge)(es, samples, tolerances) for es in systems
    )
