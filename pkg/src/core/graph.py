# vim: set expandtab shiftwidth=4 softtabstop=4:

"""Graphs, label vectors, permutations and seeded random streams.

Permutations are stored in function form: a 0-indexed integer array ``sigma``
where ``sigma[i]`` holds the image of ``i``. Community labels are 1-indexed
(values in ``1..k``) so they read like the ``[K]`` of the model; node ids on
disk are 0-indexed.
"""

import logging
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DataError

logger = logging.getLogger(__name__)

# Largest graph for which a dense adjacency view is handed out.
DENSE_VIEW_LIMIT = 512


class Graph:
    """Undirected simple graph stored as a sorted CSR adjacency.

    Parameters
    ----------
    n : int
        Number of nodes.
    rows, cols : numpy.ndarray
        Endpoints of the edges. Pairs may be given in any order and may repeat;
        ``(i, j)`` and ``(j, i)`` describe the same edge.

    Raises
    ------
    DataError
        On self-loops or endpoints outside ``[0, n)``.
    """

    def __init__(self, n, rows=(), cols=()):
        n = int(n)
        if n < 1:
            raise DataError(f"Graph needs at least one node, got n={n}")
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if rows.shape != cols.shape:
            raise DataError("Edge endpoint arrays differ in length")
        if rows.size:
            if min(rows.min(), cols.min()) < 0 or max(rows.max(), cols.max()) >= n:
                raise DataError(f"Edge endpoint outside [0, {n})")
            if np.any(rows == cols):
                raise DataError("Self-loops are not allowed")

        lo = np.minimum(rows, cols)
        hi = np.maximum(rows, cols)
        pairs = np.unique(lo * n + hi)
        self._n = n
        self._upper = np.stack([pairs // n, pairs % n], axis=1) if pairs.size else np.zeros((0, 2), dtype=np.int64)

        both_rows = np.concatenate([self._upper[:, 0], self._upper[:, 1]])
        both_cols = np.concatenate([self._upper[:, 1], self._upper[:, 0]])
        data = np.ones(both_rows.size, dtype=np.int64)
        adjacency = sp.csr_matrix((data, (both_rows, both_cols)), shape=(n, n))
        adjacency.sort_indices()
        self._adjacency = adjacency

    @classmethod
    def from_edges(cls, n, edges):
        """Build a graph from an iterable of ``(u, v)`` pairs."""
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        return cls(n, edges[:, 0], edges[:, 1])

    @classmethod
    def from_dense(cls, matrix):
        """Build a graph from a dense symmetric 0/1 matrix."""
        matrix = np.asarray(matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DataError("Adjacency matrix must be square")
        if not np.array_equal(matrix, matrix.T):
            raise DataError("Adjacency matrix must be symmetric")
        rows, cols = np.nonzero(np.triu(matrix, k=1))
        if np.any(np.diag(matrix)):
            raise DataError("Self-loops are not allowed")
        return cls(matrix.shape[0], rows, cols)

    @property
    def n(self):
        """Number of nodes."""
        return self._n

    @property
    def num_edges(self):
        """Number of undirected edges."""
        return self._upper.shape[0]

    @property
    def edges(self):
        """Edges as an ``(m, 2)`` array with ``u < v``, sorted row-major."""
        return self._upper.copy()

    @property
    def adjacency(self):
        """Symmetric CSR adjacency matrix with integer entries."""
        return self._adjacency

    @property
    def degrees(self):
        """Node degrees."""
        return np.asarray(self._adjacency.sum(axis=1)).ravel()

    def density(self):
        """Fraction of the ``n(n-1)/2`` node pairs that are edges."""
        pairs = self._n * (self._n - 1) / 2
        return self.num_edges / pairs if pairs else 0.0

    def to_dense(self, force=False):
        """Dense adjacency view.

        Parameters
        ----------
        force : bool
            Allow graphs larger than ``DENSE_VIEW_LIMIT`` nodes.
        """
        if self._n > DENSE_VIEW_LIMIT and not force:
            raise DataError(f"Dense view refused for n={self._n} > {DENSE_VIEW_LIMIT}; pass force=True")
        return self._adjacency.toarray()

    def permute_nodes(self, order):
        """Return the isomorphic graph in which old node ``order[i]`` becomes node ``i``."""
        order = np.asarray(order, dtype=np.int64)
        position = np.empty_like(order)
        position[order] = np.arange(order.size)
        return Graph(self._n, position[self._upper[:, 0]], position[self._upper[:, 1]])

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self._n == other._n and np.array_equal(self._upper, other._upper)

    def __hash__(self):
        return hash((self._n, self._upper.tobytes()))

    def __repr__(self):
        return f"Graph(n={self._n}, edges={self.num_edges})"


@dataclass(frozen=True, eq=False)
class LabelVector:
    """Community assignment with 1-indexed labels.

    Parameters
    ----------
    values : numpy.ndarray
        Labels, one per node, each in ``1..k``.
    k : int
        Number of communities. Empty communities are allowed.
    """

    values: np.ndarray
    k: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int64).ravel()
        k = int(self.k)
        if k < 1:
            raise DataError(f"Number of communities must be positive, got {k}")
        if values.size and (values.min() < 1 or values.max() > k):
            raise DataError(f"Labels must lie in [1, {k}]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "k", k)

    @classmethod
    def from_zero_based(cls, values, k=None):
        """Build from 0-indexed cluster ids, as produced by most clustering code."""
        values = np.asarray(values, dtype=np.int64)
        if k is None:
            k = int(values.max()) + 1 if values.size else 1
        return cls(values + 1, k)

    def zero_based(self):
        """Labels shifted to ``0..k-1`` for indexing."""
        return self.values - 1

    def counts(self):
        """Community sizes ``n_1..n_k``."""
        return np.bincount(self.values - 1, minlength=self.k)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, LabelVector):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.k, self.values.tobytes()))


class RngStream:
    """Splittable, counter-based random stream.

    Each stream wraps a ``numpy.random.Generator`` over the Philox bit generator,
    seeded from ``SeedSequence(seed, spawn_key=key)``. Streams with different
    ``(seed, key)`` are independent; equal ``(seed, key)`` reproduce the same draws.

    Parameters
    ----------
    seed : int
        Non-negative 64-bit root seed.
    key : tuple of int
        Stream identifier, extended by :meth:`spawn`.
    """

    def __init__(self, seed, key=()):
        seed = int(seed)
        if seed < 0 or seed >= 2**64:
            raise DataError(f"Seed must be a 64-bit non-negative integer, got {seed}")
        key = tuple(int(k) for k in key)
        if any(k < 0 for k in key):
            raise DataError("Stream keys must be non-negative")
        self.seed = seed
        self.key = key
        self._generator = None

    @property
    def generator(self):
        """The underlying numpy generator (created on first use)."""
        if self._generator is None:
            sequence = np.random.SeedSequence(self.seed, spawn_key=self.key)
            self._generator = np.random.Generator(np.random.Philox(sequence))
        return self._generator

    def spawn(self, *key):
        """Derive an independent child stream keyed by ``key``."""
        return RngStream(self.seed, self.key + tuple(key))

    def integer_seed(self):
        """Draw a 31-bit integer, for libraries that only take integer seeds."""
        return int(self.generator.integers(2**31 - 1))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"


# Permutations


def identity(k):
    """Identity permutation on ``k`` elements."""
    return np.arange(int(k), dtype=np.int64)


def check_permutation(sigma, k=None):
    """Validate and return ``sigma`` as an int array.

    Raises
    ------
    DataError
        If ``sigma`` is not a bijection of ``0..k-1``.
    """
    sigma = np.asarray(sigma, dtype=np.int64).ravel()
    if k is not None and sigma.size != k:
        raise DataError(f"Permutation has size {sigma.size}, expected {k}")
    if not np.array_equal(np.sort(sigma), np.arange(sigma.size)):
        raise DataError(f"Not a permutation: {sigma.tolist()}")
    return sigma


def inverse(sigma):
    """Inverse permutation."""
    sigma = check_permutation(sigma)
    return np.argsort(sigma).astype(np.int64)


def compose(sigma, tau):
    """Composition ``sigma o tau``, i.e. ``i -> sigma(tau(i))``.

    In matrix form this is ``P_tau @ P_sigma``: applying the result to a vector
    applies ``P_sigma`` first and then ``P_tau``.
    """
    sigma = check_permutation(sigma)
    tau = check_permutation(tau)
    if sigma.size != tau.size:
        raise DataError(f"Cannot compose permutations of sizes {sigma.size} and {tau.size}")
    return sigma[tau]


def permute_matrix(matrix, sigma):
    """Conjugate a square matrix by a permutation.

    Returns ``P_sigma B P_sigma^T``, whose ``(i, j)`` entry is ``B[sigma(i), sigma(j)]``.
    """
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DataError(f"Expected a square matrix, got shape {matrix.shape}")
    sigma = check_permutation(sigma, matrix.shape[0])
    return matrix[np.ix_(sigma, sigma)]


def permutation_matrix(sigma):
    """Matrix form ``P`` with ``(P v)_i = v[sigma(i)]``."""
    sigma = check_permutation(sigma)
    matrix = np.zeros((sigma.size, sigma.size))
    matrix[np.arange(sigma.size), sigma] = 1.0
    return matrix


def from_permutation_matrix(matrix):
    """Function form of a permutation matrix."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DataError("Permutation matrix must be square")
    if not (np.all((matrix == 0) | (matrix == 1)) and np.all(matrix.sum(axis=0) == 1) and np.all(matrix.sum(axis=1) == 1)):
        raise DataError("Not a permutation matrix")
    return np.argmax(matrix, axis=1).astype(np.int64)


def random_permutation(k, stream):
    """Uniform random permutation on ``k`` elements drawn from ``stream``."""
    return stream.generator.permutation(int(k)).astype(np.int64)


def relabel(labels, sigma):
    """Apply ``sigma`` to every label: entry ``i`` becomes ``sigma(z_i)``."""
    sigma = check_permutation(sigma)
    if labels.k > sigma.size:
        raise DataError(f"Labels use k={labels.k} communities but permutation has size {sigma.size}")
    return LabelVector(sigma[labels.values - 1] + 1, sigma.size)


# Edge-list files


def read_edge_list(path):
    """Read a graph from an edge-list file.

    One ``u v`` pair of 0-indexed node ids per line; ``#`` starts a comment. The
    node count is ``1 + max id`` unless a ``n=<int>`` header line is present.

    Parameters
    ----------
    path : str or os.PathLike
        File to read.

    Returns
    -------
    Graph
        The parsed graph.

    Raises
    ------
    DataError
        On malformed lines, naming ``file:line``.
    """
    path = os.fspath(path)
    header_n = None
    rows, cols = [], []
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("n="):
                try:
                    header_n = int(line[2:])
                except ValueError:
                    raise DataError(f"{path}:{lineno}: bad node-count header {line!r}") from None
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: node ids must be integers, got {line!r}") from None
            if u < 0 or v < 0:
                raise DataError(f"{path}:{lineno}: negative node id")
            if u == v:
                raise DataError(f"{path}:{lineno}: self-loop on node {u}")
            rows.append(u)
            cols.append(v)

    largest = max(max(rows, default=-1), max(cols, default=-1))
    n = header_n if header_n is not None else largest + 1
    if n < 1:
        raise DataError(f"{path}: empty edge list without an 'n=' header")
    if largest >= n:
        raise DataError(f"{path}: node id {largest} exceeds header n={n}")
    graph = Graph(n, rows, cols)
    logger.debug(f"Read {path}: {graph.n} nodes, {graph.num_edges} edges")
    return graph


def write_edge_list(graph, path):
    """Write ``graph`` as an edge-list file with an ``n=`` header."""
    with open(os.fspath(path), "w", encoding="utf-8") as f:
        f.write(f"n={graph.n}\n")
        for u, v in graph.edges:
            f.write(f"{u} {v}\n")
