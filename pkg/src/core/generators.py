# vim: set expandtab shiftwidth=4 softtabstop=4:

"""Seeded random network generators: SBM, random dot product graphs and graphons.

Every generator uses the clipped Bernoulli draw ``1{U < p}``, valid for any real
``p``. Draw order is fixed: node-level latent variables first (labels, latent
positions or graphon coordinates, one node after the other), then one uniform
per node pair in row-major ``i < j`` order.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .graph import Graph, LabelVector
from .sbm import SbmParams

logger = logging.getLogger(__name__)

# Node pairs drawn per chunk when sampling edges.
PAIRS_PER_CHUNK = 1 << 22
SYMMETRY_GRID = 17
SYMMETRY_TOLERANCE = 1e-12


def bernb(p, stream):
    """Clipped Bernoulli draw: ``1`` if a fresh uniform is below ``p``, else ``0``."""
    return int(stream.generator.random() < p)


def _pair_chunks(n):
    """Yield ``(rows, cols)`` blocks of the ``i < j`` pairs in row-major order."""
    start = 0
    while start < n - 1:
        stop = start
        pairs = 0
        while stop < n - 1 and (pairs == 0 or pairs + (n - 1 - stop) <= PAIRS_PER_CHUNK):
            pairs += n - 1 - stop
            stop += 1
        rows = np.arange(start, stop, dtype=np.int64)
        lengths = n - 1 - rows
        row_index = np.repeat(rows, lengths)
        offsets = np.arange(pairs, dtype=np.int64) - np.repeat(np.cumsum(lengths) - lengths, lengths)
        yield row_index, row_index + 1 + offsets
        start = stop


def sample_edges(n, probability, stream):
    """Draw a graph whose pair ``(i, j)`` is an edge with probability ``probability(i, j)``.

    Parameters
    ----------
    n : int
        Number of nodes.
    probability : callable
        Vectorized ``probability(rows, cols) -> array`` of edge probabilities;
        values outside ``[0, 1]`` saturate.
    stream : RngStream
    """
    generator = stream.generator
    kept_rows, kept_cols = [], []
    for rows, cols in _pair_chunks(n):
        hits = generator.random(rows.size) < probability(rows, cols)
        kept_rows.append(rows[hits])
        kept_cols.append(cols[hits])
    if not kept_rows:
        return Graph(n)
    return Graph(n, np.concatenate(kept_rows), np.concatenate(kept_cols))


def sample_labels(pi, n, stream):
    """Draw ``n`` i.i.d. categorical labels from the prior ``pi`` (1-indexed)."""
    cumulative = np.cumsum(pi)
    cumulative[-1] = 1.0
    values = np.searchsorted(cumulative, stream.generator.random(n), side="right")
    return LabelVector(np.minimum(values, len(pi) - 1) + 1, len(pi))


def sample_sbm(params, n, stream):
    """Draw a graph and its true labels from ``SBM(params.b, params.pi)``.

    Returns
    -------
    graph : Graph
    labels : LabelVector
    """
    n = int(n)
    if n < 1:
        raise DataError(f"Need at least one node, got n={n}")
    labels = sample_labels(params.pi, n, stream)
    z = labels.zero_based()
    b = params.b
    graph = sample_edges(n, lambda rows, cols: b[z[rows], z[cols]], stream)
    return graph, labels


# Latent position distributions for random dot product graphs


class GaussianLatent:
    """``N(0, cov)`` latent positions, drawn as ``standard_normal @ L^T`` with ``L L^T = cov``."""

    def __init__(self, cov):
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        try:
            self.factor = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise DataError("Latent covariance must be symmetric positive definite") from None
        self.cov = cov

    @property
    def dim(self):
        return self.cov.shape[0]

    def sample(self, n, stream):
        return stream.generator.standard_normal((n, self.dim)) @ self.factor.T


class GaussianMixtureLatent:
    """Mixture of centred Gaussians.

    Component indicators are drawn first (one uniform per node), then one standard
    normal vector per node.
    """

    def __init__(self, covs, weights=None):
        self.components = [GaussianLatent(cov) for cov in covs]
        if len({c.dim for c in self.components}) != 1:
            raise DataError("Mixture components must share a dimension")
        weights = np.full(len(covs), 1.0 / len(covs)) if weights is None else np.asarray(weights, dtype=float)
        if weights.size != len(covs) or np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
            raise DataError("Mixture weights must be a probability vector matching the components")
        self.weights = weights

    @property
    def dim(self):
        return self.components[0].dim

    def sample(self, n, stream):
        generator = stream.generator
        cumulative = np.cumsum(self.weights)
        cumulative[-1] = 1.0
        which = np.searchsorted(cumulative, generator.random(n), side="right")
        normals = generator.standard_normal((n, self.dim))
        out = np.empty_like(normals)
        for index, component in enumerate(self.components):
            rows = which == index
            out[rows] = normals[rows] @ component.factor.T
        return out


class PointMassLatent:
    """Every node sits at the same latent position; consumes no randomness."""

    def __init__(self, point):
        self.point = np.atleast_1d(np.asarray(point, dtype=float))

    @property
    def dim(self):
        return self.point.size

    def sample(self, n, stream):
        return np.tile(self.point, (n, 1))


@dataclass(frozen=True)
class RdpgSpec:
    """Random dot product graph: edge probability ``rho * <x_i, x_j>``."""

    latent: object
    rho: float = 1.0

    def __post_init__(self):
        if self.rho < 0:
            raise DataError(f"Sparsity factor must be non-negative, got {self.rho}")


def sample_rdpg(spec, n, stream):
    """Draw a graph from ``RDPG(spec.latent, spec.rho)``."""
    n = int(n)
    if n < 1:
        raise DataError(f"Need at least one node, got n={n}")
    positions = spec.latent.sample(n, stream)
    rho = spec.rho
    return sample_edges(n, lambda rows, cols: rho * np.einsum("ij,ij->i", positions[rows], positions[cols]), stream)


# Graphons


@dataclass(frozen=True)
class GraphonSpec:
    """Graphon ``rho * w`` with ``w`` a vectorized symmetric function on ``[0, 1]^2``.

    Raises
    ------
    DataError
        If ``w`` is not symmetric on a check grid or ``rho < 0``.
    """

    w: object
    rho: float = 1.0

    def __post_init__(self):
        if self.rho < 0:
            raise DataError(f"Sparsity factor must be non-negative, got {self.rho}")
        grid = np.linspace(0.0, 1.0, SYMMETRY_GRID)
        x, y = np.meshgrid(grid, grid)
        forward = np.broadcast_to(self.w(x.ravel(), y.ravel()), x.size)
        backward = np.broadcast_to(self.w(y.ravel(), x.ravel()), x.size)
        if np.max(np.abs(forward - backward)) > SYMMETRY_TOLERANCE:
            raise DataError("Graphon is not symmetric")

    def __call__(self, x, y):
        return self.rho * self.w(x, y)


def sample_graphon(spec, n, stream):
    """Draw a graph from the graphon: uniform node coordinates, then clipped Bernoulli edges."""
    n = int(n)
    if n < 1:
        raise DataError(f"Need at least one node, got n={n}")
    coordinates = stream.generator.random(n)
    return sample_edges(
        n,
        lambda rows, cols: np.broadcast_to(spec(coordinates[rows], coordinates[cols]), rows.shape),
        stream,
    )


def perturb_graphon(spec, eps, delta):
    """Add ``eps`` on the square ``[0.5 - delta, 0.5 + delta]^2``.

    The sparsity factor is kept, so the added mass is ``rho * eps``.
    """
    if not 0.0 <= delta <= 0.5:
        raise DataError(f"Band half-width must lie in [0, 0.5], got {delta}")
    base = spec.w
    low, high = 0.5 - delta, 0.5 + delta

    def w(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = (x >= low) & (x <= high) & (y >= low) & (y <= high)
        return base(x, y) + eps * inside

    return GraphonSpec(w, spec.rho)


# Experiment presets


def two_block_params(eps):
    """Two-block SBM with ``B = [[0.5+eps, 0.2], [0.2, 0.5+eps]]`` and ``pi = (0.4, 0.6)``."""
    return SbmParams([[0.5 + eps, 0.2], [0.2, 0.5 + eps]], [0.4, 0.6])


def uniform_prior(k):
    return np.full(k, 1.0 / k)


def random_connectivity(k, stream, low=0.2, high=0.7):
    """Symmetric ``k x k`` matrix with i.i.d. ``Unif(low, high)`` entries on and above the diagonal."""
    upper = stream.generator.uniform(low, high, size=(k, k))
    upper = np.triu(upper)
    return upper + np.triu(upper, 1).T


def perturb_connectivity(b, eps, stream):
    """Add symmetric ``N(0, eps^2)`` noise to ``b``; entries may leave ``[0, 1]``."""
    b = np.asarray(b, dtype=float)
    noise = np.triu(stream.generator.normal(0.0, eps, size=b.shape))
    return b + noise + np.triu(noise, 1).T


def clipped_params(b, pi):
    """``SbmParams`` with ``b`` clipped into ``[0, 1]``.

    Clipping leaves the clipped-Bernoulli draws unchanged.
    """
    return SbmParams(np.clip(b, 0.0, 1.0), pi)


RDPG_COV = np.array([[3.0, 2.0], [2.0, 3.0]])
RDPG_ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])
RDPG_RHO = 0.15


def rdpg_experiment(which, rho=RDPG_RHO):
    """Null latent law of the RDPG experiments.

    ``which=1`` is ``N(0, S)`` and ``which=2`` the equal mixture of ``N(0, S)`` and
    ``N(0, O S O^T)`` with ``O`` a quarter-turn rotation; both give the same graph law.
    """
    if which == 1:
        return RdpgSpec(GaussianLatent(RDPG_COV), rho)
    if which == 2:
        rotated = RDPG_ROTATION @ RDPG_COV @ RDPG_ROTATION.T
        return RdpgSpec(GaussianMixtureLatent([RDPG_COV, rotated]), rho)
    raise DataError(f"Unknown RDPG experiment {which!r}")


def rdpg_alternative(rho=RDPG_RHO):
    """Alternative latent law ``N(0, I_2)``."""
    return RdpgSpec(GaussianLatent(np.eye(2)), rho)


def smooth_graphon_w(x, y):
    """``(x^2 + y^2 + sqrt(x) + sqrt(y)) / 4``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 0.25 * (x**2 + y**2 + np.sqrt(x) + np.sqrt(y))


def smooth_graphon(rho=1.0):
    return GraphonSpec(smooth_graphon_w, rho)
