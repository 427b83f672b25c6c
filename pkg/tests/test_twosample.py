# vim: set expandtab shiftwidth=4 softtabstop=4:

from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from conftest import draw_sample
from scipy.stats import chi2, kstest

from sbmts.core.errors import DataError, NumericalError
from sbmts.core.graph import RngStream, permute_matrix
from sbmts.core.matching import dmatch_bruteforce
from sbmts.core.sbm import SbmParams
from sbmts.core.twosample import (
    SamplePrep,
    pair_counts,
    prepare_sample,
    sbm_two_sample_test,
    test_from_graphs,
)


def _prep(s, m):
    """Aggregates of a sample without per-network detail."""
    s = np.asarray(s, dtype=float)
    m = np.asarray(m, dtype=float)
    bhat = np.divide(s, m, out=np.zeros(s.shape), where=m > 0)
    return SamplePrep([], [], [], [], bhat, s, m)


def test_pair_counts_halve_the_diagonal():
    assert pair_counts([[20, 30], [30, 6]]).tolist() == [[10.0, 30.0], [30.0, 3.0]]


def test_single_block_reduces_to_two_proportion_test():
    # 30 of 100 pairs linked in the first sample, 50 of 100 in the second.
    result = sbm_two_sample_test(_prep([[60]], [[200]]), _prep([[100]], [[200]]))
    pooled = 0.4
    expected = (0.3 - 0.5) ** 2 / (pooled * (1 - pooled) * (1 / 100 + 1 / 100))
    assert result.df == 1
    assert result.statistic == pytest.approx(expected)
    assert result.p_value == pytest.approx(chi2.sf(expected, 1))
    assert result.pooled_b[0, 0] == pytest.approx(pooled)


def test_statistic_uses_pair_count_weights():
    s1 = np.array([[40, 30], [30, 90]])
    m1 = np.array([[100, 200], [200, 120]])
    s2 = np.array([[35, 40], [40, 100]])
    m2 = np.array([[80, 160], [160, 150]])
    result = sbm_two_sample_test(_prep(s1, m1), _prep(s2, m2))
    assert result.perm.tolist() == [0, 1]

    b1, b2 = s1 / m1, s2 / m2
    pooled = (s1 + s2) / (m1 + m2)
    p1, p2 = pair_counts(m1), pair_counts(m2)
    weights = 2 * p1 * p2 / (p1 + p2)
    terms = weights * (b1 - b2) ** 2 / (2 * pooled * (1 - pooled))
    assert result.df == 3
    assert result.statistic == pytest.approx(terms[np.triu_indices(2)].sum())
    assert np.allclose(result.b1, b1)
    assert np.allclose(result.b2, b2)


def test_global_matching_aligns_relabeled_second_sample():
    s = np.array([[40, 30], [30, 90]])
    m = np.array([[100, 200], [200, 120]])
    swap = [1, 0]
    result = sbm_two_sample_test(_prep(s, m), _prep(permute_matrix(s, swap), permute_matrix(m, swap)))
    assert result.perm.tolist() == swap
    assert result.statistic == pytest.approx(0.0, abs=1e-12)
    assert result.p_value == pytest.approx(1.0)


def test_empty_blocks_are_masked_and_reduce_df():
    s1 = np.array([[40, 30], [30, 90]])
    m1 = np.array([[100, 200], [200, 120]])
    s2 = np.array([[0, 30], [30, 90]])
    m2 = np.array([[0, 200], [200, 120]])
    result = sbm_two_sample_test(_prep(s1, m1), _prep(s2, m2))
    assert result.df == 2
    assert result.masks.tolist() == [[True, False], [False, False]]


def test_all_blocks_masked_raises():
    with pytest.raises(NumericalError, match="No informative blocks"):
        sbm_two_sample_test(_prep([[0]], [[0]]), _prep([[5]], [[10]]))


def test_variance_floor_keeps_statistic_finite():
    result = sbm_two_sample_test(_prep([[0]], [[200]]), _prep([[0]], [[200]]))
    assert result.statistic == 0.0
    assert result.floored.tolist() == [[True]]
    assert result.pooled_b[0, 0] == pytest.approx(1 / 202)


def test_mismatched_k_raises():
    with pytest.raises(DataError):
        sbm_two_sample_test(_prep([[1]], [[2]]), _prep(np.ones((2, 2)), np.ones((2, 2)) * 2))


def test_result_serializes_expected_fields():
    result = sbm_two_sample_test(_prep([[60]], [[200]]), _prep([[100]], [[200]]))
    data = result.to_dict()
    for key in ("statistic", "df", "p_value", "perm", "b1", "b2", "pooled_b", "sigma2", "masks", "flags"):
        assert key in data
    assert set(data["flags"]) == {"sign_degenerate", "floored", "within_sample_degenerate"}


def test_prepare_sample_aligns_networks(separated):
    drawn = draw_sample(separated, 300, 4, RngStream(21))
    graphs = [graph for graph, _ in drawn]
    labels = [z for _, z in drawn]
    prep = prepare_sample(graphs, labels, RngStream(22))
    assert len(prep) == 4
    assert prep.k == 2
    for bhat, sigma in zip(prep.bhats, prep.perms, strict=True):
        assert np.allclose(permute_matrix(bhat, sigma), prep.bhats[0], atol=0.05)
    assert np.allclose(prep.bhat, prep.s / prep.m, atol=0.02)


def test_prepare_sample_input_errors(separated):
    graph, labels = draw_sample(separated, 50, 1, RngStream(0))[0]
    with pytest.raises(DataError):
        prepare_sample([], [], RngStream(0))
    with pytest.raises(DataError):
        prepare_sample([graph, graph], [labels], RngStream(0))


def test_from_graphs_is_deterministic_and_detects_a_difference(separated):
    alternative = SbmParams([[0.3, 0.2], [0.2, 0.7]], [0.4, 0.6])
    sample1 = [graph for graph, _ in draw_sample(separated, 200, 3, RngStream(1))]
    sample2 = [graph for graph, _ in draw_sample(alternative, 200, 3, RngStream(2))]
    first = test_from_graphs(sample1, sample2, 2, RngStream(3))
    second = test_from_graphs(sample1, sample2, 2, RngStream(3))
    assert first.statistic == second.statistic
    assert first.df == 3
    assert first.p_value < 1e-6


def test_from_graphs_same_law_is_not_rejected(separated):
    sample1 = [graph for graph, _ in draw_sample(separated, 200, 3, RngStream(4))]
    sample2 = [graph for graph, _ in draw_sample(separated, 200, 3, RngStream(5))]
    result = test_from_graphs(sample1, sample2, 2, RngStream(6))
    assert result.p_value > 0.001


def test_from_graphs_needs_both_samples(separated):
    sample = [graph for graph, _ in draw_sample(separated, 50, 1, RngStream(0))]
    with pytest.raises(DataError):
        test_from_graphs(sample, [], 2, RngStream(0))


def test_statistic_ignores_node_order_and_sample_order(separated):
    alternative = SbmParams([[0.3, 0.2], [0.2, 0.7]], [0.4, 0.6])
    sample1 = [graph for graph, _ in draw_sample(separated, 200, 3, RngStream(7))]
    sample2 = [graph for graph, _ in draw_sample(alternative, 200, 3, RngStream(8))]
    statistic = test_from_graphs(sample1, sample2, 2, RngStream(9)).statistic

    generator = np.random.default_rng(10)
    shuffled = [graph.permute_nodes(generator.permutation(graph.n)) for graph in sample1]
    assert test_from_graphs(shuffled, sample2, 2, RngStream(9)).statistic == pytest.approx(statistic, rel=1e-9)
    assert test_from_graphs(sample2, sample1, 2, RngStream(9)).statistic == pytest.approx(statistic, rel=1e-9)


def _replicate_statistics(null, alternative, n, size, replicates, seed):
    """Statistic and p-value of ``replicates`` independent tests, run on a thread pool."""

    def replicate(r):
        stream = RngStream(seed).spawn(r)
        sample1 = [graph for graph, _ in draw_sample(null, n, size, stream.spawn(0))]
        sample2 = [graph for graph, _ in draw_sample(alternative, n, size, stream.spawn(1))]
        result = test_from_graphs(sample1, sample2, 2, stream.spawn(2))
        return result.statistic, result.p_value

    with ThreadPoolExecutor() as executor:
        statistics, p_values = np.array(list(executor.map(replicate, range(replicates)))).T
    return statistics, p_values


@pytest.mark.slow
def test_null_calibration(separated):
    """With a shared law the statistic follows a chi-squared law with 3 degrees of freedom."""
    statistics, p_values = _replicate_statistics(separated, separated, 300, 20, 2000, 2024)
    assert 2.7 <= statistics.mean() <= 3.3
    assert 0.035 <= np.mean(p_values < 0.05) <= 0.065
    assert kstest(statistics, chi2(3).cdf).statistic <= 0.05


@pytest.mark.slow
def test_statistic_grows_with_sample_size(separated):
    alternative = SbmParams([[0.5, 0.2], [0.2, 0.6]], [0.4, 0.6])
    assert dmatch_bruteforce(separated.b, alternative.b)[0] == pytest.approx(0.1)
    medians = [
        np.median(_replicate_statistics(separated, alternative, 300, size, 100, 77 + size)[0]) for size in (5, 20, 80)
    ]
    assert medians[0] < medians[1] < medians[2]
