# vim: set expandtab shiftwidth=4 softtabstop=4:

import logging

import numpy as np
import pytest
from conftest import draw_sample

from sbmts.core.baselines import (
    MOMENT_FLOOR,
    ase_embed,
    ase_mmd_distance,
    graph_moments,
    mmd_exact,
    mmd_rff,
    moment_feature,
    nclm_distance,
    pairwise_average_stat,
)
from sbmts.core.errors import DataError
from sbmts.core.graph import Graph, RngStream


def _naive_mmd(x, y, sigma2, self_norm):
    def kernel(u, v):
        return np.exp(-np.sum((u - v) ** 2) / (2 * sigma2))

    n, m = len(x), len(y)
    xx = sum(kernel(x[i], x[j]) for i in range(n) for j in range(n) if i != j)
    yy = sum(kernel(y[i], y[j]) for i in range(m) for j in range(m) if i != j)
    xy = sum(kernel(x[i], y[j]) for i in range(n) for j in range(m) if i != j)
    second = n * (n - 1) if self_norm == "as_printed" else m * (m - 1)
    return xx / (n * (n - 1)) + yy / second - 2 * xy / (n * m)


@pytest.fixture
def small_graph(separated):
    return draw_sample(separated, 40, 1, RngStream(7))[0][0]


def test_moments_match_matrix_powers(small_graph):
    a = small_graph.to_dense().astype(float) / small_graph.n
    expected = [np.trace(np.linalg.matrix_power(a, k)) for k in range(1, 9)]
    assert np.allclose(graph_moments(small_graph, 8), expected, rtol=1e-9, atol=1e-15)


def test_block_moments_match_dense_path(small_graph):
    dense = graph_moments(small_graph, 9)
    blocked = graph_moments(small_graph, 9, dense_limit=0)
    assert np.allclose(blocked, dense, rtol=1e-9, atol=1e-15)


def test_moments_of_empty_graph_are_zero():
    assert graph_moments(Graph(5), 4).tolist() == [0.0] * 4
    feature = moment_feature(Graph(5), 4)
    assert feature.floored == 4
    assert np.allclose(feature.g, np.log(MOMENT_FLOOR))


def test_odd_moments_of_single_edge_are_floored():
    feature = moment_feature(Graph.from_edges(2, [(0, 1)]), 4)
    assert feature.j == 4
    assert feature.floored == 2
    assert feature.g[1] == pytest.approx(np.log(0.5))
    assert feature.g[3] == pytest.approx(np.log(0.125))
    with pytest.raises(DataError):
        graph_moments(Graph(3), 0)


def test_flooring_past_the_first_moment_is_logged(small_graph, caplog):
    star = Graph.from_edges(6, [(0, leaf) for leaf in range(1, 6)])
    with caplog.at_level(logging.WARNING, logger="sbmts"):
        assert moment_feature(small_graph, 6).floored == 1
        assert not caplog.records
        feature = moment_feature(star, 6)
    assert feature.floored == 3
    assert "NCLM: 3 of 6 moments floored" in caplog.text
    assert np.isfinite(nclm_distance(Graph(6), star, 6))


def test_nclm_distance(small_graph, separated):
    other = draw_sample(separated, 40, 1, RngStream(8))[0][0]
    assert nclm_distance(small_graph, small_graph) == 0.0
    assert nclm_distance(small_graph, other) == pytest.approx(nclm_distance(other, small_graph))
    assert nclm_distance(small_graph, other) > 0.0


def test_ase_embed_triangle():
    graph = Graph.from_edges(4, [(0, 1), (1, 2), (0, 2)])
    embedding = ase_embed(graph, 1)
    assert embedding.d == 1
    assert embedding.singular_values == pytest.approx([2.0])
    assert np.allclose(np.abs(embedding.x[:3, 0]), np.sqrt(2 / 3))
    assert embedding.x[3, 0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("self_norm", ["as_printed", "symmetric"])
def test_mmd_exact_matches_naive_sums(self_norm):
    generator = np.random.default_rng(3)
    x = generator.normal(0.0, 1.0, (7, 2))
    y = generator.normal(0.5, 1.0, (5, 2))
    expected = _naive_mmd(x, y, 0.8, self_norm)
    assert mmd_exact(x, y, 0.8, self_norm) == pytest.approx(expected, rel=1e-12)


def test_mmd_rff_approximates_exact():
    generator = np.random.default_rng(4)
    x = generator.normal(0.0, 1.0, (30, 2))
    y = generator.normal(1.0, 1.0, (30, 2))
    exact = mmd_exact(x, y)
    approximate = mmd_rff(x, y, features=4096, stream=RngStream(5))
    assert approximate == pytest.approx(exact, abs=0.05)
    assert mmd_rff(x, y, features=64, stream=RngStream(5)) == mmd_rff(x, y, features=64, stream=RngStream(5))


def test_mmd_input_errors():
    x = np.zeros((3, 2))
    with pytest.raises(DataError):
        mmd_exact(x, np.zeros((3, 3)))
    with pytest.raises(DataError):
        mmd_exact(x, np.zeros((1, 2)))
    with pytest.raises(DataError):
        mmd_exact(x, x, sigma2=0.0)
    with pytest.raises(DataError):
        mmd_exact(x, x, self_norm="other")
    with pytest.raises(DataError):
        mmd_rff(x, x)


def test_ase_mmd_distance_compares_embeddings(small_graph, separated):
    other = draw_sample(separated, 40, 1, RngStream(9))[0][0]
    expected = mmd_exact(ase_embed(small_graph, 2).x, ase_embed(other, 2).x)
    assert ase_mmd_distance(small_graph, other, 2) == pytest.approx(expected)


def test_pairwise_average_stat():
    def distance(a, b):
        return abs(a - b)

    assert pairwise_average_stat([0, 1], [3], distance) == pytest.approx(2.5)
    with pytest.raises(DataError):
        pairwise_average_stat([], [1], distance)
