# vim: set expandtab shiftwidth=4 softtabstop=4:

"""Competing network distances: log-moment (NCLM) and spectral-embedding MMD.

Both produce raw dissimilarities without a null law; the experiment harness
calibrates them by simulation.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .errors import DataError
from .numerics import topd_eigs

logger = logging.getLogger(__name__)

DEFAULT_MOMENTS = 20
DEFAULT_BANDWIDTH = 1.0
MOMENT_FLOOR = 1e-15
DENSE_MOMENT_LIMIT = 2048
MOMENT_BLOCK = 256
SELF_NORMS = ("as_printed", "symmetric")


@dataclass(frozen=True, eq=False)
class MomentFeature:
    """Log graph moments ``g_j = log max(m_j, floor)`` for ``j = 1..J``."""

    g: np.ndarray
    floored: int

    @property
    def j(self):
        return self.g.size


@dataclass(frozen=True, eq=False)
class AseEmbedding:
    """Adjacency spectral embedding ``X = U sqrt(S)``.

    ``singular_values`` holds ``|lambda|`` in descending order.
    """

    x: np.ndarray
    singular_values: np.ndarray

    @property
    def d(self):
        return self.x.shape[1]


def _check_order(j):
    j = int(j)
    if j < 1:
        raise DataError(f"Moment order must be positive, got {j}")
    return j


def graph_moments(graph, j=DEFAULT_MOMENTS, dense_limit=DENSE_MOMENT_LIMIT):
    """Normalized closed-walk counts ``m_k = tr[(A/n)^k]`` for ``k = 1..j``.

    Small graphs use the full spectrum. Larger ones accumulate the traces exactly
    from powers of ``A/n`` applied to blocks of identity columns, using
    ``tr(M^(a+b)) = sum_i <M^a e_i, M^b e_i>`` for symmetric ``M``.
    """
    j = _check_order(j)
    n = graph.n
    if graph.num_edges == 0:
        return np.zeros(j)
    powers = np.arange(1, j + 1)

    if n <= dense_limit:
        eigenvalues = scipy.linalg.eigvalsh(graph.adjacency.toarray().astype(float)) / n
        moments = (eigenvalues[:, None] ** powers[None, :]).sum(axis=0)
        # No self-loops, so tr(A) is exactly zero whatever the eigenvalue rounding.
        moments[0] = 0.0
        return moments

    scaled = graph.adjacency.astype(float) / n
    half = (j + 1) // 2
    moments = np.zeros(j)
    for start in range(0, n, MOMENT_BLOCK):
        stop = min(start + MOMENT_BLOCK, n)
        block = np.zeros((n, stop - start))
        block[np.arange(start, stop), np.arange(stop - start)] = 1.0
        walks = [block]
        for _ in range(half):
            walks.append(scaled @ walks[-1])
        for k in powers:
            a = k // 2
            moments[k - 1] += float(np.einsum("ij,ij->", walks[a], walks[k - a]))
    return moments


def moment_feature(graph, j=DEFAULT_MOMENTS):
    """Floored log-moment vector of ``graph``.

    Moments below ``MOMENT_FLOOR`` are raised to it and counted in ``floored``. The
    first moment of a loop-free graph is always zero; flooring any later moment is
    logged as a warning.
    """
    moments = graph_moments(graph, j)
    low = moments < MOMENT_FLOOR
    floored = int(low.sum())
    if low[1:].any():
        logger.warning(
            f"NCLM: {floored} of {moments.size} moments floored at {MOMENT_FLOOR:g} "
            f"(graph with {graph.n} nodes, {graph.num_edges} edges)"
        )
    return MomentFeature(np.log(np.where(low, MOMENT_FLOOR, moments)), floored)


def feature_distance(feature1, feature2):
    """Euclidean distance between two log-moment features of the same order."""
    if feature1.j != feature2.j:
        raise DataError(f"Moment orders differ: {feature1.j} and {feature2.j}")
    return float(np.linalg.norm(feature1.g - feature2.g))


def nclm_distance(graph1, graph2, j=DEFAULT_MOMENTS):
    """Euclidean distance between the floored log-moment vectors of two graphs."""
    return feature_distance(moment_feature(graph1, j), moment_feature(graph2, j))


def ase_embed(graph, d):
    """Adjacency spectral embedding using the ``d`` eigenpairs of largest magnitude."""
    eigenvalues, eigenvectors = topd_eigs(graph, d)
    magnitudes = np.abs(eigenvalues)
    return AseEmbedding(eigenvectors * np.sqrt(magnitudes), magnitudes)


def _check_samples(x, y):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[1] != y.shape[1]:
        raise DataError(f"Samples differ in dimension: {x.shape[1]} and {y.shape[1]}")
    if x.shape[0] < 2 or y.shape[0] < 2:
        raise DataError("MMD needs at least two points per sample")
    return x, y


def _check_bandwidth(sigma2, self_norm):
    if sigma2 <= 0:
        raise DataError(f"Bandwidth must be positive, got {sigma2}")
    if self_norm not in SELF_NORMS:
        raise DataError(f"Unknown MMD self normalization {self_norm!r}, expected one of {SELF_NORMS}")


def _combine(xx, yy, xy, n, m, self_norm):
    """Combine the three off-diagonal kernel sums into the MMD estimate.

    ``as_printed`` divides both self sums by ``n(n-1)``; ``symmetric`` uses
    ``m(m-1)`` for the second. The cross sum always has weight ``2/(nm)``.
    """
    second = n * (n - 1) if self_norm == "as_printed" else m * (m - 1)
    return float(xx / (n * (n - 1)) + yy / second - 2.0 * xy / (n * m))


def mmd_exact(x, y, sigma2=DEFAULT_BANDWIDTH, self_norm="as_printed"):
    """Gaussian-kernel MMD estimate with all ``i == j`` index pairs left out.

    Parameters
    ----------
    x : array_like
        ``n x d`` sample.
    y : array_like
        ``m x d`` sample.
    sigma2 : float
        Kernel bandwidth in ``exp(-|u - v|^2 / (2 sigma2))``.
    self_norm : {"as_printed", "symmetric"}
        Normalization of the second within-sample sum.

    Returns
    -------
    float
    """
    x, y = _check_samples(x, y)
    _check_bandwidth(sigma2, self_norm)
    n, m = x.shape[0], y.shape[0]

    def off_diagonal_sum(a, b):
        kernel = np.exp(-cdist(a, b, "sqeuclidean") / (2 * sigma2))
        shared = min(a.shape[0], b.shape[0])
        return kernel.sum() - np.trace(kernel[:shared, :shared])

    return _combine(off_diagonal_sum(x, x), off_diagonal_sum(y, y), off_diagonal_sum(x, y), n, m, self_norm)


def mmd_rff(x, y, sigma2=DEFAULT_BANDWIDTH, features=4096, stream=None, self_norm="as_printed"):
    """Random Fourier feature approximation of :func:`mmd_exact`.

    Frequencies are drawn first (``features x d`` normals with variance ``1/sigma2``),
    then the phases (``features`` uniforms on ``[0, 2 pi)``).
    """
    if stream is None:
        raise DataError("mmd_rff needs an RngStream")
    x, y = _check_samples(x, y)
    _check_bandwidth(sigma2, self_norm)
    features = int(features)
    if features < 1:
        raise DataError(f"Feature count must be positive, got {features}")
    n, m = x.shape[0], y.shape[0]
    generator = stream.generator
    omega = generator.standard_normal((features, x.shape[1])) / np.sqrt(sigma2)
    phase = generator.uniform(0.0, 2 * np.pi, size=features)
    scale = np.sqrt(2.0 / features)
    phi_x = scale * np.cos(x @ omega.T + phase)
    phi_y = scale * np.cos(y @ omega.T + phase)

    sum_x = phi_x.sum(axis=0)
    sum_y = phi_y.sum(axis=0)
    shared = min(n, m)
    xx = sum_x @ sum_x - np.einsum("ij,ij->", phi_x, phi_x)
    yy = sum_y @ sum_y - np.einsum("ij,ij->", phi_y, phi_y)
    xy = sum_x @ sum_y - np.einsum("ij,ij->", phi_x[:shared], phi_y[:shared])
    return _combine(xx, yy, xy, n, m, self_norm)


def ase_mmd_distance(graph1, graph2, d, sigma2=DEFAULT_BANDWIDTH, features=0, stream=None, self_norm="as_printed"):
    """MMD between the rows of two adjacency spectral embeddings.

    ``features=0`` evaluates the kernel sums exactly.
    """
    x = ase_embed(graph1, d).x
    y = ase_embed(graph2, d).x
    if features:
        return mmd_rff(x, y, sigma2, features, stream, self_norm)
    return mmd_exact(x, y, sigma2, self_norm)


def pairwise_average_stat(sample1, sample2, distance, executor=None):
    """Mean of ``distance(a, b)`` over every pair ``a`` in ``sample1`` and ``b`` in ``sample2``."""
    if not sample1 or not sample2:
        raise DataError("Both samples need at least one network")
    pairs = [(a, b) for a in sample1 for b in sample2]
    if executor is None:
        values = [distance(a, b) for a, b in pairs]
    else:
        values = list(executor.map(lambda pair: distance(*pair), pairs))
    return float(np.mean(values))
