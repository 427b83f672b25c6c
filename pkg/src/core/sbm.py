# vim: set expandtab shiftwidth=4 softtabstop=4:

"""Stochastic block model estimation.

Block sufficient statistics, the block-averaging estimator of the connectivity
matrix, regularized spectral clustering and the misclassification rate.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DataError
from .graph import LabelVector
from .numerics import kmeans, lap_max, topd_eigs

logger = logging.getLogger(__name__)

PRIOR_TOLERANCE = 1e-12
ROW_NORM_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class SbmParams:
    """Connectivity matrix and class prior of an SBM.

    Parameters
    ----------
    b : array_like
        ``K x K`` symmetric matrix with entries in ``[0, 1]``.
    pi : array_like
        Class prior of length ``K`` summing to one.
    """

    b: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        b = np.array(self.b, dtype=float)
        pi = np.array(self.pi, dtype=float).ravel()
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise DataError(f"Connectivity matrix must be square, got shape {b.shape}")
        if pi.size != b.shape[0]:
            raise DataError(f"Prior has length {pi.size}, connectivity matrix has K={b.shape[0]}")
        if not np.array_equal(b, b.T):
            raise DataError("Connectivity matrix must be symmetric")
        if np.any(b < 0) or np.any(b > 1):
            raise DataError("Connectivity entries must lie in [0, 1]")
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > PRIOR_TOLERANCE:
            raise DataError(f"Prior must be a probability vector, got sum {pi.sum()!r}")
        b.setflags(write=False)
        pi.setflags(write=False)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "pi", pi)

    @property
    def k(self):
        return self.b.shape[0]

    def to_dict(self):
        return {"B": self.b.tolist(), "pi": self.pi.tolist()}


@dataclass(frozen=True, eq=False)
class BlockStats:
    """Block sums ``s`` and block counts ``m`` of a labeled graph (ordered node pairs)."""

    s: np.ndarray
    m: np.ndarray

    @property
    def k(self):
        return self.s.shape[0]


@dataclass(frozen=True, eq=False)
class SbmFit:
    """Labels, block statistics and connectivity estimate of one network."""

    labels: LabelVector
    stats: BlockStats
    bhat: np.ndarray
    empty_mask: np.ndarray


def block_counts(counts):
    """Ordered-pair counts ``n_k n_l`` off the diagonal and ``n_k (n_k - 1)`` on it."""
    counts = np.asarray(counts, dtype=np.int64)
    return np.outer(counts, counts) - np.diag(counts)


def block_stats(graph, labels):
    """Block sums and block counts of ``graph`` under ``labels``.

    ``s[k, l]`` counts ordered node pairs ``(i, j)`` with ``A_ij = 1``, ``z_i = k``
    and ``z_j = l``, so every edge inside a block is counted twice.

    Raises
    ------
    DataError
        If the label vector does not match the graph size.
    """
    if len(labels) != graph.n:
        raise DataError(f"Label vector has length {len(labels)}, graph has {graph.n} nodes")
    k = labels.k
    membership = sp.csr_matrix(
        (np.ones(graph.n, dtype=np.int64), (np.arange(graph.n), labels.zero_based())),
        shape=(graph.n, k),
    )
    sums = np.asarray((membership.T @ graph.adjacency @ membership).todense(), dtype=np.int64)
    return BlockStats(sums, block_counts(labels.counts()))


def conn(stats):
    """Block-average connectivity estimate ``s / m``.

    Returns
    -------
    bhat : numpy.ndarray
        ``s / m`` where ``m > 0`` and 0 elsewhere.
    mask : numpy.ndarray
        Boolean matrix marking the blocks with ``m == 0``.
    """
    mask = stats.m == 0
    bhat = np.divide(stats.s, stats.m, out=np.zeros(stats.s.shape), where=~mask)
    return bhat, mask


def normalized_operator(graph):
    """``D^{-1/2} (A + tau/n J) D^{-1/2}`` with ``tau`` the mean degree, as a LinearOperator.

    ``D`` holds the regularized degrees ``deg + tau``; a zero regularized degree is
    replaced by one.
    """
    n = graph.n
    adjacency = graph.adjacency.astype(float)
    degrees = graph.degrees.astype(float)
    tau = degrees.mean()
    regularized = degrees + tau
    regularized[regularized == 0] = 1.0
    scale = 1.0 / np.sqrt(regularized)

    def matmat(x):
        x = np.asarray(x, dtype=float)
        vector = x.ndim == 1
        if vector:
            x = x[:, None]
        y = scale[:, None] * x
        out = adjacency @ y + (tau / n) * np.ones((n, 1)) * y.sum(axis=0, keepdims=True)
        out = scale[:, None] * out
        return out[:, 0] if vector else out

    return spla.LinearOperator((n, n), matvec=matmat, matmat=matmat, rmatvec=matmat, dtype=float)


def spectral_cluster(graph, k, stream, restarts=10):
    """Regularized spectral clustering.

    Parameters
    ----------
    graph : Graph
    k : int
        Number of communities.
    stream : RngStream
        Seeds the k-means restarts.
    restarts : int
        k-means++ restarts.

    Returns
    -------
    LabelVector
        Labels in ``1..k``.

    Raises
    ------
    DataError
        If ``graph.n < k``.
    """
    k = int(k)
    if k < 1:
        raise DataError(f"Number of communities must be positive, got {k}")
    if graph.n < k:
        raise DataError(f"Cannot split {graph.n} nodes into {k} communities")
    if k == 1:
        return LabelVector(np.ones(graph.n, dtype=np.int64), 1)

    if graph.num_edges == 0:
        embedding = np.eye(graph.n, k)
    else:
        _, embedding = topd_eigs(normalized_operator(graph), k)

    norms = np.linalg.norm(embedding, axis=1)
    rows = norms > ROW_NORM_FLOOR
    embedding[rows] /= norms[rows, None]
    return kmeans(embedding, k, stream, restarts=restarts).labels


def misclassification(z, zhat):
    """Fraction of nodes mislabeled by ``zhat`` under the best relabeling.

    Solved exactly as an assignment problem on the confusion matrix.
    """
    if len(z) != len(zhat):
        raise DataError(f"Label vectors differ in length: {len(z)} and {len(zhat)}")
    n = len(z)
    if n == 0:
        return 0.0
    k = max(z.k, zhat.k)
    confusion = np.zeros((k, k))
    np.add.at(confusion, (z.zero_based(), zhat.zero_based()), 1.0)
    agreement = lap_max(confusion.T).value
    return (n - agreement) / n


def fit_sbm(graph, k, stream, detector=spectral_cluster):
    """Fit a ``k``-block SBM to one network.

    Parameters
    ----------
    graph : Graph
    k : int
    stream : RngStream
        Passed to the detector.
    detector : callable
        ``detector(graph, k, stream) -> LabelVector``; regularized spectral
        clustering by default.

    Returns
    -------
    SbmFit
    """
    labels = detector(graph, k, stream)
    if labels.k != k:
        labels = LabelVector(labels.values, k)
    stats = block_stats(graph, labels)
    bhat, mask = conn(stats)
    if mask.any():
        logger.debug(f"SBM fit: {int(np.triu(mask).sum())} empty blocks")
    return SbmFit(labels, stats, bhat, mask)
