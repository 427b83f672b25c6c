# vim: set expandtab shiftwidth=4 softtabstop=4:

"""Two-sample test for samples of unlabeled networks under SBMs.

Each network's community labels are randomized and its connectivity estimate is
matched to the first network of its sample. The aligned block statistics are
pooled per sample, the two samples are matched globally, and the entrywise
differences of the two connectivity estimates are combined into a chi-squared
statistic.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericalError
from .graph import identity, permute_matrix, random_permutation, relabel
from .matching import spectral_match
from .numerics import chisq_cdf, harmonic_mean
from .sbm import block_stats, conn, fit_sbm, spectral_cluster

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SamplePrep:
    """One sample after label randomization and within-sample matching.

    Per network ``t``: ``labels[t]``, ``stats[t]``, ``bhats[t]`` and the permutation
    ``perms[t]`` aligning it to network 0. Per sample: the average aligned
    connectivity ``bhat`` and the aligned aggregates ``s`` and ``m``.
    """

    labels: list
    stats: list
    bhats: list
    perms: list
    bhat: np.ndarray
    s: np.ndarray
    m: np.ndarray
    sign_degenerate: bool = False

    @property
    def k(self):
        return self.s.shape[0]

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class TestResult:
    """Outcome of the two-sample test.

    ``b1`` and ``b2`` are the aligned connectivity estimates of the two samples,
    ``pooled_b`` the pooled estimate after the variance floor, and ``masks`` marks
    the entries left out of the statistic.
    """

    statistic: float
    df: int
    p_value: float
    perm: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    pooled_b: np.ndarray
    sigma2: np.ndarray
    weights: np.ndarray
    masks: np.ndarray
    floored: np.ndarray
    sign_degenerate: bool = False
    flags: dict = field(default_factory=dict)

    __test__ = False

    def to_dict(self):
        return {
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "perm": self.perm.tolist(),
            "b1": self.b1.tolist(),
            "b2": self.b2.tolist(),
            "pooled_b": self.pooled_b.tolist(),
            "sigma2": self.sigma2.tolist(),
            "masks": self.masks.tolist(),
            "flags": {
                "sign_degenerate": self.sign_degenerate,
                "floored": self.floored.tolist(),
                **self.flags,
            },
        }


def pair_counts(m):
    """Independent node pairs per block: ordered-pair counts with the diagonal halved."""
    pairs = np.array(m, dtype=float)
    np.fill_diagonal(pairs, np.diag(pairs) / 2)
    return pairs


def prepare_sample(graphs, initial_labels, stream):
    """Randomize labels and align every network of a sample to its first network.

    Parameters
    ----------
    graphs : list of Graph
    initial_labels : list of LabelVector
        Community estimates for each graph, all with the same ``k``.
    stream : RngStream
        Network ``t`` draws its label permutation from ``stream.spawn(t)``.

    Returns
    -------
    SamplePrep

    Raises
    ------
    DataError
        On empty or mismatched inputs.
    """
    if not graphs:
        raise DataError("A sample needs at least one network")
    if len(graphs) != len(initial_labels):
        raise DataError(f"{len(graphs)} graphs but {len(initial_labels)} label vectors")
    k = initial_labels[0].k
    if any(labels.k != k for labels in initial_labels):
        raise DataError("All label vectors of a sample must share the same number of communities")

    labels, stats, bhats, perms = [], [], [], []
    degenerate = False
    for t, (graph, z) in enumerate(zip(graphs, initial_labels, strict=True)):
        z = relabel(z, random_permutation(k, stream.spawn(t)))
        network_stats = block_stats(graph, z)
        bhat, _ = conn(network_stats)
        if t == 0:
            sigma = identity(k)
        else:
            match = spectral_match(bhat, bhats[0])
            sigma = match.sigma
            degenerate |= match.sign_degenerate
        labels.append(z)
        stats.append(network_stats)
        bhats.append(bhat)
        perms.append(sigma)

    s = sum(permute_matrix(st.s, sigma) for st, sigma in zip(stats, perms, strict=True))
    m = sum(permute_matrix(st.m, sigma) for st, sigma in zip(stats, perms, strict=True))

    aligned = np.stack([permute_matrix(b, sigma) for b, sigma in zip(bhats, perms, strict=True)])
    present = np.stack([permute_matrix(st.m, sigma) > 0 for st, sigma in zip(stats, perms, strict=True)])
    seen = present.sum(axis=0)
    bhat = np.divide((aligned * present).sum(axis=0), seen, out=np.zeros((k, k)), where=seen > 0)

    return SamplePrep(labels, stats, bhats, perms, bhat, np.asarray(s), np.asarray(m), degenerate)


def sbm_two_sample_test(sample1, sample2):
    """Chi-squared test of equal connectivity between two prepared samples.

    Parameters
    ----------
    sample1, sample2 : SamplePrep

    Returns
    -------
    TestResult
        ``statistic`` is referred to a chi-squared law with ``df`` equal to the
        number of unmasked upper-triangle blocks.

    Raises
    ------
    DataError
        If the samples use different ``k``.
    NumericalError
        If every block is masked.
    """
    if sample1.k != sample2.k:
        raise DataError(f"Samples use different numbers of communities: {sample1.k} and {sample2.k}")
    k = sample1.k

    match = spectral_match(sample2.bhat, sample1.bhat)
    sigma = match.sigma
    s1, m1 = sample1.s.astype(float), sample1.m.astype(float)
    s2 = permute_matrix(sample2.s, sigma).astype(float)
    m2 = permute_matrix(sample2.m, sigma).astype(float)

    masks = (m1 == 0) | (m2 == 0)
    upper = np.triu(np.ones((k, k), dtype=bool))
    df = int((upper & ~masks).sum())
    if df == 0:
        raise NumericalError("No informative blocks: every block is empty in one of the samples")

    total = m1 + m2
    pooled = np.divide(s1 + s2, total, out=np.zeros((k, k)), where=total > 0)
    pairs = pair_counts(total)
    low = 1.0 / (pairs + 2)
    floored = (pooled < low) | (pooled > 1 - low)
    pooled = np.clip(pooled, low, 1 - low)
    sigma2 = pooled * (1 - pooled)

    b1 = np.divide(s1, m1, out=np.zeros((k, k)), where=m1 > 0)
    b2 = np.divide(s2, m2, out=np.zeros((k, k)), where=m2 > 0)

    p1, p2 = pair_counts(m1), pair_counts(m2)
    weights = harmonic_mean(p1, p2, where=~masks)
    terms = weights / (2 * sigma2) * (b1 - b2) ** 2
    statistic = float(terms[upper & ~masks].sum())
    p_value = 1.0 - chisq_cdf(statistic, df)

    degenerate = bool(match.sign_degenerate or sample1.sign_degenerate or sample2.sign_degenerate)
    masked = int((upper & masks).sum())
    if masked:
        logger.warning(f"Test: {masked} masked blocks, df reduced to {df}")
    if degenerate:
        logger.warning("Test: sign-degenerate matching, permutation not uniquely determined")
    logger.debug(f"Test: T={statistic:.4f}, df={df}, p={p_value:.4g}")

    return TestResult(
        statistic=statistic,
        df=df,
        p_value=p_value,
        perm=sigma,
        b1=b1,
        b2=b2,
        pooled_b=pooled,
        sigma2=sigma2,
        weights=weights,
        masks=masks,
        floored=floored & ~masks,
        sign_degenerate=degenerate,
        flags={"within_sample_degenerate": [sample1.sign_degenerate, sample2.sign_degenerate]},
    )


def fit_labels(graphs, k, stream, detector=spectral_cluster, executor=None):
    """Fit each graph of a sample; graph ``t`` uses ``stream.spawn(t)``."""

    def fit(item):
        t, graph = item
        return fit_sbm(graph, k, stream.spawn(t), detector=detector).labels

    items = list(enumerate(graphs))
    if executor is None:
        return [fit(item) for item in items]
    return list(executor.map(fit, items))


def test_from_graphs(graphs1, graphs2, k, stream, detector=spectral_cluster, executor=None):
    """Run the whole pipeline on two lists of graphs.

    Sample ``r`` fits its networks with ``stream.spawn(1, r)`` and randomizes labels
    with ``stream.spawn(2, r)``, so the result depends only on the inputs and the
    seed.

    Parameters
    ----------
    graphs1, graphs2 : list of Graph
    k : int
        Number of communities.
    stream : RngStream
    detector : callable, optional
        Community detector, ``detector(graph, k, stream) -> LabelVector``.
    executor : concurrent.futures.Executor, optional
        Fits networks concurrently when given.

    Returns
    -------
    TestResult
    """
    if not graphs1 or not graphs2:
        raise DataError("Both samples need at least one network")
    samples = []
    for r, graphs in enumerate((graphs1, graphs2), start=1):
        labels = fit_labels(graphs, k, stream.spawn(1, r), detector=detector, executor=executor)
        samples.append(prepare_sample(graphs, labels, stream.spawn(2, r)))
    return sbm_two_sample_test(*samples)


test_from_graphs.__test__ = False
