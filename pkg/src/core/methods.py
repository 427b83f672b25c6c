# vim: set expandtab shiftwidth=4 softtabstop=4:

import threading

from .baselines import ase_mmd_distance, feature_distance, moment_feature, pairwise_average_stat
from .twosample import test_from_graphs


class SbmTsMethod:
    """Applies the SBM two-sample test to a pair of samples."""

    name = "sbmts"
    calibrated = True

    def __init__(self, config, k):
        """Initialize the test handler.

        Parameters
        ----------
        config : ExperimentConfig
            The experiment configuration.
        k : int
            Number of communities to fit.
        """
        self.config = config
        self.k = k

    def test(self, sample1, sample2, stream):
        """Run the full test.

        Parameters
        ----------
        sample1, sample2 : list of Graph
            The two samples.
        stream : RngStream
            Randomness for label fitting and randomization.

        Returns
        -------
        TestResult
            The test outcome.
        """
        return test_from_graphs(sample1, sample2, self.k, stream)

    def apply(self, sample1, sample2, stream):
        """Score a pair of samples by the test statistic.

        Returns
        -------
        float
            The chi-squared statistic; larger means stronger evidence of a difference.
        """
        return self.test(sample1, sample2, stream).statistic


class NclmMethod:
    """Scores a pair of samples by the average log-moment distance.

    ``floored`` accumulates, over every network scored so far, the number of
    moments raised to the floor before taking logs.
    """

    name = "nclm"
    calibrated = False

    def __init__(self, config):
        """Initialize the distance handler.

        Parameters
        ----------
        config : ExperimentConfig
            The experiment configuration; ``moments`` sets the order ``J``.
        """
        self.config = config
        self.floored = 0
        self._lock = threading.Lock()

    def features(self, sample):
        """Log-moment features of every network in ``sample``."""
        features = [moment_feature(graph, self.config.moments) for graph in sample]
        with self._lock:
            self.floored += sum(feature.floored for feature in features)
        return features

    def apply(self, sample1, sample2, stream):
        """Average NCLM distance over all cross-sample pairs.

        The stream is unused; the distance is deterministic.
        """
        return pairwise_average_stat(self.features(sample1), self.features(sample2), feature_distance)


class AseMmdMethod:
    """Scores a pair of samples by the average MMD between spectral embeddings."""

    name = "ase_mmd"
    calibrated = False

    def __init__(self, config, k):
        """Initialize the distance handler.

        Parameters
        ----------
        config : ExperimentConfig
            The experiment configuration.
        k : int
            Default embedding dimension when ``embedding_dim`` is unset.
        """
        self.config = config
        self.k = k

    @property
    def dim(self):
        """Embedding dimension.

        Returns
        -------
        int
            ``embedding_dim`` from the configuration, else ``k``.
        """
        return self.config.embedding_dim or self.k

    def apply(self, sample1, sample2, stream):
        """Average ASE-MMD distance over all cross-sample pairs.

        With random Fourier features, pair ``(t, s)`` draws from ``stream.spawn(t, s)``.
        """
        config = self.config

        def distance(t, s):
            return ase_mmd_distance(
                sample1[t],
                sample2[s],
                self.dim,
                sigma2=config.bandwidth,
                features=config.features,
                stream=stream.spawn(t, s),
                self_norm=config.mmd_self_norm,
            )

        return pairwise_average_stat(range(len(sample1)), range(len(sample2)), distance)
