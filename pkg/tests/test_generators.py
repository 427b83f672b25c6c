# vim: set expandtab shiftwidth=4 softtabstop=4:

import numpy as np
import pytest

from sbmts.core import generators
from sbmts.core.errors import DataError
from sbmts.core.generators import (
    GaussianLatent,
    GaussianMixtureLatent,
    GraphonSpec,
    PointMassLatent,
    RdpgSpec,
    bernb,
    clipped_params,
    perturb_connectivity,
    perturb_graphon,
    random_connectivity,
    rdpg_alternative,
    rdpg_experiment,
    sample_edges,
    sample_graphon,
    sample_labels,
    sample_rdpg,
    sample_sbm,
    smooth_graphon,
    two_block_params,
    uniform_prior,
)
from sbmts.core.graph import RngStream


def test_bernb_saturates():
    stream = RngStream(0)
    assert all(bernb(1.5, stream) == 1 for _ in range(20))
    assert all(bernb(-0.5, stream) == 0 for _ in range(20))


def test_pair_chunks_cover_all_pairs_in_row_major_order(monkeypatch):
    monkeypatch.setattr(generators, "PAIRS_PER_CHUNK", 4)
    rows, cols = zip(*generators._pair_chunks(7), strict=True)
    pairs = list(zip(np.concatenate(rows).tolist(), np.concatenate(cols).tolist(), strict=True))
    assert pairs == [(i, j) for i in range(7) for j in range(i + 1, 7)]


def test_chunking_does_not_change_the_draws(monkeypatch):
    def probability(rows, cols):
        return np.full(rows.shape, 0.3)

    whole = sample_edges(30, probability, RngStream(9))
    monkeypatch.setattr(generators, "PAIRS_PER_CHUNK", 7)
    assert sample_edges(30, probability, RngStream(9)) == whole


def test_sample_sbm_is_reproducible(separated):
    first = sample_sbm(separated, 100, RngStream(3))
    second = sample_sbm(separated, 100, RngStream(3))
    assert first[0] == second[0]
    assert first[1] == second[1]
    assert sample_sbm(separated, 100, RngStream(4))[0] != first[0]


def test_sample_sbm_block_densities(separated):
    graph, labels = sample_sbm(separated, 600, RngStream(11))
    z = labels.zero_based()
    a = graph.to_dense(force=True)
    for k in range(2):
        for ell in range(2):
            block = a[np.ix_(z == k, z == ell)]
            if k == ell:
                size = block.shape[0]
                density = block.sum() / (size * (size - 1))
            else:
                density = block.mean()
            assert density == pytest.approx(separated.b[k, ell], abs=0.02)
    assert np.mean(z == 0) == pytest.approx(0.4, abs=0.06)


def test_sample_labels_follow_prior():
    labels = sample_labels(np.array([0.2, 0.0, 0.8]), 5000, RngStream(2))
    counts = labels.counts()
    assert counts[1] == 0
    assert counts[0] / 5000 == pytest.approx(0.2, abs=0.02)


def test_point_mass_rdpg_is_erdos_renyi():
    spec = RdpgSpec(PointMassLatent([0.6, 0.0]), rho=0.5)
    graph = sample_rdpg(spec, 300, RngStream(1))
    assert graph.density() == pytest.approx(0.18, abs=0.01)


def test_rdpg_latent_laws():
    gaussian = GaussianLatent([[3.0, 2.0], [2.0, 3.0]])
    points = gaussian.sample(20000, RngStream(0))
    assert np.allclose(np.cov(points.T), [[3.0, 2.0], [2.0, 3.0]], atol=0.15)

    mixture = rdpg_experiment(2).latent
    assert isinstance(mixture, GaussianMixtureLatent)
    points = mixture.sample(20000, RngStream(0))
    # The rotated component has covariance [[3, -2], [-2, 3]], so the mixture is uncorrelated.
    assert np.allclose(np.cov(points.T), [[3.0, 0.0], [0.0, 3.0]], atol=0.15)

    assert rdpg_alternative().rho == 0.15
    with pytest.raises(DataError):
        rdpg_experiment(3)
    with pytest.raises(DataError):
        GaussianLatent([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(DataError):
        GaussianMixtureLatent([np.eye(2), np.eye(2)], weights=[0.3, 0.3])


def test_rdpg_sparsity_scales_density():
    dense = sample_rdpg(RdpgSpec(GaussianLatent(np.eye(2)), rho=0.15), 400, RngStream(5))
    sparse = sample_rdpg(RdpgSpec(GaussianLatent(np.eye(2)), rho=0.05), 400, RngStream(5))
    assert sparse.num_edges < dense.num_edges


def test_graphon_symmetry_check_and_sampling():
    with pytest.raises(DataError, match="symmetric"):
        GraphonSpec(lambda x, y: x)
    with pytest.raises(DataError):
        GraphonSpec(lambda x, y: x * y, rho=-1.0)

    constant = GraphonSpec(lambda x, y: 0.25 + 0.0 * x, rho=1.0)
    graph = sample_graphon(constant, 300, RngStream(3))
    assert graph.density() == pytest.approx(0.25, abs=0.01)


def test_smooth_graphon_and_perturbation():
    spec = smooth_graphon(0.5)
    assert spec(1.0, 1.0) == pytest.approx(0.5)
    bumped = perturb_graphon(spec, 0.1, 0.2)
    assert bumped(0.5, 0.5) == pytest.approx(spec(0.5, 0.5) + 0.05)
    assert bumped(0.1, 0.5) == pytest.approx(spec(0.1, 0.5))
    with pytest.raises(DataError):
        perturb_graphon(spec, 0.1, 0.6)


def test_connectivity_presets():
    assert np.allclose(two_block_params(0.05).b, [[0.55, 0.2], [0.2, 0.55]])
    assert uniform_prior(4).tolist() == [0.25] * 4

    b = random_connectivity(3, RngStream(1), 0.2, 0.7)
    assert np.array_equal(b, b.T)
    assert b.min() >= 0.2 and b.max() <= 0.7

    perturbed = perturb_connectivity(b, 0.05, RngStream(2))
    assert np.array_equal(perturbed, perturbed.T)
    assert not np.array_equal(perturbed, b)

    params = clipped_params(np.array([[1.2, -0.1], [-0.1, 0.5]]), [0.5, 0.5])
    assert params.b.tolist() == [[1.0, 0.0], [0.0, 0.5]]
