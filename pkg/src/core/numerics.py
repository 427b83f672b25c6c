# vim: set expandtab shiftwidth=4 softtabstop=4:

"""Numerical kernels: eigendecompositions, assignment, k-means and the chi-squared law."""

import itertools
import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import linear_sum_assignment
from scipy.special import gammainc
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from .errors import DataError, NumericalError
from .graph import Graph, LabelVector

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-10
RESIDUAL_TOLERANCE = 1e-8
DENSE_EIGEN_LIMIT = 512
BRUTEFORCE_MAX_K = 8
KMEANS_MAX_ITER = 300
KMEANS_RESTARTS = 10


@dataclass(frozen=True)
class Evd:
    """Symmetric eigendecomposition ``B = Q diag(eigenvalues) Q^T``.

    Eigenvalues are in descending order and column ``i`` of ``eigenvectors`` is
    paired with ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        """Return ``Q diag(lambda) Q^T``."""
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T


@dataclass(frozen=True)
class LapSolution:
    """Solution of a linear assignment problem.

    ``value`` is ``trace(P_sigma M) = sum_i M[sigma(i), i]``.
    """

    permutation: np.ndarray
    value: float


@dataclass(frozen=True)
class KMeansResult:
    """Outcome of :func:`kmeans`.

    Attributes
    ----------
    labels : LabelVector
        Cluster labels of the best restart.
    inertia : float
        Within-cluster sum of squares of that restart.
    empty_clusters : int
        Number of labels in ``1..k`` that no point received.
    """

    labels: LabelVector
    inertia: float
    empty_clusters: int

    @property
    def degenerate(self):
        """True when some cluster ended up empty."""
        return self.empty_clusters > 0


def fix_signs(vectors):
    """Flip columns so each column's largest-magnitude entry is positive.

    Ties go to the lowest index.
    """
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.size == 0:
        return vectors
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _square(matrix, name="matrix"):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise DataError(f"{name} must be a non-empty square matrix, got shape {matrix.shape}")
    return matrix


def evd_sym(matrix):
    """Eigendecomposition of a small symmetric matrix.

    Parameters
    ----------
    matrix : array_like
        ``K x K`` symmetric matrix (symmetric to within ``1e-10``).

    Returns
    -------
    Evd
        Eigenvalues in descending order with sign-normalized eigenvectors.

    Raises
    ------
    DataError
        If the input is not square and symmetric.
    NumericalError
        If LAPACK fails to converge.
    """
    matrix = _square(matrix)
    if not np.all(np.isfinite(matrix)):
        raise DataError("Matrix has non-finite entries")
    scale = max(1.0, np.abs(matrix).max())
    asymmetry = np.abs(matrix - matrix.T).max()
    if asymmetry > SYMMETRY_TOLERANCE * scale:
        raise DataError(f"Matrix is not symmetric (max asymmetry {asymmetry:.3e})")
    matrix = (matrix + matrix.T) / 2
    try:
        eigenvalues, eigenvectors = scipy.linalg.eigh(matrix)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Symmetric eigensolver did not converge: {e}", residual=float("nan")) from e
    order = np.argsort(-eigenvalues, kind="stable")
    return Evd(eigenvalues[order], fix_signs(eigenvectors[:, order]))


def _as_operator(matrix):
    """Return ``(operator, n, is_empty)`` for a graph, sparse/dense matrix or LinearOperator."""
    if isinstance(matrix, Graph):
        return matrix.adjacency.astype(float), matrix.n, matrix.num_edges == 0
    if isinstance(matrix, spla.LinearOperator):
        return matrix, matrix.shape[0], False
    if sp.issparse(matrix):
        return matrix.astype(float), matrix.shape[0], matrix.nnz == 0
    matrix = np.asarray(matrix, dtype=float)
    return matrix, matrix.shape[0], not np.any(matrix)


def _apply(operator, vectors):
    if isinstance(operator, spla.LinearOperator):
        return operator.matmat(vectors)
    return operator @ vectors


def topd_eigs(matrix, d, dense_limit=DENSE_EIGEN_LIMIT):
    """Leading eigenpairs of a large symmetric matrix, by magnitude.

    Parameters
    ----------
    matrix : Graph, scipy.sparse matrix, numpy.ndarray or LinearOperator
        Symmetric ``n x n`` operator.
    d : int
        Number of eigenpairs.
    dense_limit : int
        Problems with ``n <= dense_limit`` are solved densely.

    Returns
    -------
    eigenvalues : numpy.ndarray
        ``d`` eigenvalues sorted by ``|lambda|`` descending.
    eigenvectors : numpy.ndarray
        ``n x d`` orthonormal eigenvectors with the sign convention of :func:`fix_signs`.

    Raises
    ------
    NumericalError
        If the iteration does not converge or a residual exceeds ``1e-8 max(1, |lambda|)``.
    """
    operator, n, empty = _as_operator(matrix)
    d = int(d)
    if d < 1 or d > n:
        raise DataError(f"Requested {d} eigenpairs of an operator of size {n}")

    if empty:
        return np.zeros(d), np.eye(n, d)

    if n <= dense_limit or d >= n - 1:
        dense = _apply(operator, np.eye(n)) if isinstance(operator, spla.LinearOperator) else operator
        dense = dense.toarray() if sp.issparse(dense) else np.asarray(dense)
        try:
            eigenvalues, eigenvectors = scipy.linalg.eigh((dense + dense.T) / 2)
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"Dense eigensolver did not converge: {e}", residual=float("nan")) from e
    else:
        try:
            eigenvalues, eigenvectors = spla.eigsh(operator, k=d, which="LM", maxiter=5 * n, tol=0)
        except spla.ArpackNoConvergence as e:
            raise NumericalError(f"Lanczos iteration did not converge for d={d}, n={n}", residual=float("nan")) from e

    order = np.argsort(-np.abs(eigenvalues), kind="stable")[:d]
    eigenvalues = eigenvalues[order]
    eigenvectors = fix_signs(eigenvectors[:, order])

    residuals = np.linalg.norm(_apply(operator, eigenvectors) - eigenvectors * eigenvalues, axis=0)
    bounds = RESIDUAL_TOLERANCE * np.maximum(1.0, np.abs(eigenvalues))
    if np.any(residuals > bounds):
        worst = float(np.max(residuals - bounds))
        raise NumericalError(f"Eigenpair residual above tolerance for n={n}, d={d}", residual=worst)
    return eigenvalues, eigenvectors


def assignment_value(matrix, sigma):
    """``trace(P_sigma M) = sum_i M[sigma(i), i]``."""
    matrix = np.asarray(matrix, dtype=float)
    return float(matrix[sigma, np.arange(matrix.shape[1])].sum())


def lap_max(matrix):
    """Maximize ``trace(P_sigma M)`` over permutations.

    Parameters
    ----------
    matrix : array_like
        ``K x K`` real matrix.

    Returns
    -------
    LapSolution
        Optimal permutation and objective value.

    Raises
    ------
    NumericalError
        If the matrix has NaN or infinite entries.
    """
    matrix = _square(matrix)
    if not np.all(np.isfinite(matrix)):
        raise NumericalError("Assignment matrix has non-finite entries")
    # Row i of M^T is column i of M, so the column chosen for row i is sigma(i).
    _, cols = linear_sum_assignment(matrix.T, maximize=True)
    sigma = cols.astype(np.int64)
    return LapSolution(sigma, assignment_value(matrix, sigma))


def lap_bruteforce(matrix):
    """Exhaustive maximum of ``trace(P_sigma M)``; ties go to the lexicographically smallest sigma.

    Raises
    ------
    DataError
        If ``K > 8``.
    """
    matrix = _square(matrix)
    k = matrix.shape[0]
    if k > BRUTEFORCE_MAX_K:
        raise DataError(f"Brute-force assignment limited to K <= {BRUTEFORCE_MAX_K}, got {k}")
    best, best_value = None, -np.inf
    for candidate in itertools.permutations(range(k)):
        sigma = np.array(candidate, dtype=np.int64)
        value = assignment_value(matrix, sigma)
        if value > best_value:
            best, best_value = sigma, value
    return LapSolution(best, best_value)


def kmeans(points, k, stream, restarts=KMEANS_RESTARTS):
    """Lloyd's k-means with k-means++ seeding and several restarts.

    Parameters
    ----------
    points : array_like
        ``n x d`` data.
    k : int
        Number of clusters, ``1 <= k <= n``.
    stream : RngStream
        Source of the seeding randomness.
    restarts : int
        Number of k-means++ restarts; the lowest-inertia run is kept.

    Returns
    -------
    KMeansResult
        Labels in ``1..k``; ``empty_clusters`` counts labels nobody received,
        which happens when there are fewer distinct points than ``k``.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    k = int(k)
    if not 1 <= k <= n:
        raise DataError(f"k-means needs 1 <= k <= n, got k={k}, n={n}")

    if k == 1:
        inertia = float(((points - points.mean(axis=0)) ** 2).sum())
        return KMeansResult(LabelVector(np.ones(n, dtype=np.int64), 1), inertia, 0)

    model = KMeans(
        n_clusters=k,
        init="k-means++",
        n_init=restarts,
        max_iter=KMEANS_MAX_ITER,
        tol=0.0,
        random_state=stream.integer_seed(),
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        model.fit(points)

    labels = LabelVector.from_zero_based(model.labels_, k)
    empty = int(np.sum(labels.counts() == 0))
    if empty:
        logger.warning(f"k-means: {empty} of {k} clusters empty (fewer distinct points than clusters)")
    return KMeansResult(labels, float(model.inertia_), empty)


def chisq_cdf(x, df):
    """Chi-squared distribution function via the regularized lower incomplete gamma.

    Parameters
    ----------
    x : float
        Evaluation point, ``x >= 0``.
    df : int
        Degrees of freedom, positive.
    """
    if x < 0:
        raise DataError(f"chisq_cdf needs x >= 0, got {x}")
    if int(df) != df or df < 1:
        raise DataError(f"Degrees of freedom must be a positive integer, got {df}")
    return float(gammainc(df / 2.0, x / 2.0))


def harmonic_mean(a, b, where=None):
    """Elementwise harmonic mean ``2ab / (a + b)``.

    Parameters
    ----------
    a, b : float or array_like
        Inputs, positive wherever ``where`` holds.
    where : array_like of bool, optional
        Entries to compute; the others are 0. Defaults to all entries.

    Returns
    -------
    float or numpy.ndarray
        A float for scalar inputs.
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    where = np.ones(a.shape, dtype=bool) if where is None else np.broadcast_to(np.asarray(where, dtype=bool), a.shape)
    if np.any((a[where] <= 0) | (b[where] <= 0)):
        raise DataError(f"Harmonic mean needs positive inputs, got {a[where].min()} and {b[where].min()}")
    mean = np.divide(2.0 * a * b, a + b, out=np.zeros(a.shape), where=where)
    return float(mean) if mean.ndim == 0 else mean
