# vim: set expandtab shiftwidth=4 softtabstop=4:

"""Matching connectivity matrices without node correspondence.

Given two ``K x K`` connectivity estimates that differ by an unknown relabeling of
the communities, find the permutation ``sigma`` with
``B2 ~ permute_matrix(B1, sigma)``.
"""

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .graph import permute_matrix
from .numerics import BRUTEFORCE_MAX_K, evd_sym, lap_max

logger = logging.getLogger(__name__)

# Below this, an eigenvalue gap or a projection onto the ones vector counts as zero.
DEGENERACY_TOLERANCE = 1e-9
# At most 2**MAX_SIGN_COORDINATES sign patterns are tried.
MAX_SIGN_COORDINATES = 4


@dataclass(frozen=True)
class Friendliness:
    """Eigen-structure diagnostics of a connectivity matrix.

    Attributes
    ----------
    eta : float
        Smallest gap between two eigenvalues (``inf`` when ``K == 1``).
    theta : float
        Smallest ``|q_k^T 1|`` over the eigenvectors.
    """

    eta: float
    theta: float

    @property
    def friendly(self):
        return self.eta > DEGENERACY_TOLERANCE and self.theta > DEGENERACY_TOLERANCE


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching ``B1`` onto ``B2``.

    Attributes
    ----------
    sigma : numpy.ndarray
        Permutation with ``B2 ~ permute_matrix(B1, sigma)``.
    signs : numpy.ndarray
        Recovered eigenvector signs, entries in ``{-1, +1}``.
    residual : float
        ``||B2 - permute_matrix(B1, sigma)||_F``.
    sign_degenerate : bool
        Set when the eigen-structure did not determine the signs or the
        eigenvalue pairing uniquely.
    """

    sigma: np.ndarray
    signs: np.ndarray
    residual: float
    sign_degenerate: bool = False


def _check_pair(b1, b2):
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    if b1.ndim != 2 or b1.shape != b2.shape or b1.shape[0] != b1.shape[1]:
        raise DataError(f"Cannot match matrices of shapes {b1.shape} and {b2.shape}")
    return b1, b2


def match_residual(b1, b2, sigma):
    """Frobenius distance between ``b2`` and ``b1`` relabeled by ``sigma``."""
    return float(np.linalg.norm(np.asarray(b2, dtype=float) - permute_matrix(b1, sigma)))


def _min_gap(eigenvalues):
    if eigenvalues.size < 2:
        return np.inf
    return float(np.min(np.abs(np.diff(eigenvalues))))


def friendliness(matrix):
    """Eigenvalue gap and ones-vector alignment of a symmetric matrix.

    Parameters
    ----------
    matrix : array_like
        ``K x K`` symmetric matrix.

    Returns
    -------
    Friendliness
        ``eta`` is the minimum over distinct pairs of ``|lambda_k - lambda_l|``
        and ``theta`` the minimum of ``|q_k^T 1|``.
    """
    evd = evd_sym(matrix)
    theta = float(np.min(np.abs(evd.eigenvectors.sum(axis=0))))
    # Eigenvalues are sorted, so the closest pair is adjacent.
    return Friendliness(_min_gap(evd.eigenvalues), theta)


def spectral_match(b1, b2):
    """Match ``b1`` onto ``b2`` through their eigendecompositions.

    Eigenvectors are paired by eigenvalue rank. The sign of each pair is read off
    the projections onto the all-ones vector, and the permutation is the linear
    assignment solution for ``Q1 S Q2^T``. When a projection vanishes the sign is
    undetermined; every sign pattern over the affected coordinates is then tried
    and the lowest-residual match kept.

    Parameters
    ----------
    b1, b2 : array_like
        Symmetric ``K x K`` matrices.

    Returns
    -------
    MatchResult
        Permutation with ``b2 ~ permute_matrix(b1, sigma)``.

    Raises
    ------
    DataError
        On shape mismatch or non-symmetric input.
    """
    b1, b2 = _check_pair(b1, b2)
    evd1 = evd_sym(b1)
    evd2 = evd_sym(b2)
    q1, q2 = evd1.eigenvectors, evd2.eigenvectors

    proj1 = q1.sum(axis=0)
    proj2 = q2.sum(axis=0)
    degenerate = (np.abs(proj1) < DEGENERACY_TOLERANCE) | (np.abs(proj2) < DEGENERACY_TOLERANCE)
    tied = min(_min_gap(evd1.eigenvalues), _min_gap(evd2.eigenvalues)) < DEGENERACY_TOLERANCE

    signs = np.ones(q1.shape[1])
    informative = ~degenerate
    signs[informative] = np.sign(proj2[informative] / proj1[informative])
    signs[signs == 0] = 1.0

    free = np.flatnonzero(degenerate)
    if free.size > MAX_SIGN_COORDINATES:
        logger.warning(
            f"Matching: {free.size} sign-degenerate eigenvectors, trying signs on the first {MAX_SIGN_COORDINATES}"
        )
        free = free[:MAX_SIGN_COORDINATES]

    best = None
    for pattern in itertools.product((1.0, -1.0), repeat=free.size):
        candidate = signs.copy()
        candidate[free] = pattern
        sigma = lap_max((q1 * candidate) @ q2.T).permutation
        residual = match_residual(b1, b2, sigma)
        if best is None or residual < best.residual:
            best = MatchResult(sigma, candidate, residual)

    flagged = bool(degenerate.any() or tied)
    if flagged:
        logger.debug(f"Matching: degenerate eigen-structure, residual {best.residual:.3e}")
    return MatchResult(best.sigma, best.signs.astype(np.int64), best.residual, flagged)


def lowrank_match(b1, b2, k=1):
    """Match using a single eigenvector pair.

    Solves ``min_{P, s} ||P q1 s - q2||`` for the ``k``-th eigenvectors (1-indexed,
    by descending eigenvalue) by running the assignment on ``+q1 q2^T`` and on
    ``-q1 q2^T``. ``sign_degenerate`` is set when ``q1`` has repeated entries, in
    which case the permutation is not unique.
    """
    b1, b2 = _check_pair(b1, b2)
    size = b1.shape[0]
    if not 1 <= k <= size:
        raise DataError(f"Eigen index must lie in [1, {size}], got {k}")
    q1 = evd_sym(b1).eigenvectors[:, k - 1]
    q2 = evd_sym(b2).eigenvectors[:, k - 1]

    best = None
    for sign in (1.0, -1.0):
        sigma = lap_max(sign * np.outer(q1, q2)).permutation
        cost = float(np.linalg.norm(sign * q1[sigma] - q2))
        if best is None or cost < best[0]:
            best = (cost, sign, sigma)
    _, sign, sigma = best

    repeated = size > 1 and float(np.min(np.diff(np.sort(q1)))) < DEGENERACY_TOLERANCE
    signs = np.full(size, int(sign), dtype=np.int64)
    return MatchResult(sigma, signs, match_residual(b1, b2, sigma), bool(repeated))


def dmatch_bruteforce(b1, b2):
    """Exact ``min_sigma ||b2 - permute_matrix(b1, sigma)||_F`` by enumeration.

    Ties go to the lexicographically smallest permutation.

    Returns
    -------
    value : float
    sigma : numpy.ndarray

    Raises
    ------
    DataError
        If ``K > 8``.
    """
    b1, b2 = _check_pair(b1, b2)
    size = b1.shape[0]
    if size > BRUTEFORCE_MAX_K:
        raise DataError(f"Brute-force matching limited to K <= {BRUTEFORCE_MAX_K}, got {size}")
    best_value, best_sigma = np.inf, None
    for candidate in itertools.permutations(range(size)):
        sigma = np.array(candidate, dtype=np.int64)
        value = match_residual(b1, b2, sigma)
        if value < best_value:
            best_value, best_sigma = value, sigma
    return best_value, best_sigma
