# vim: set expandtab shiftwidth=4 softtabstop=4:

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np
from sklearn.metrics import auc, roc_curve

from .config import Hypothesis
from .errors import ConfigError, NumericalError
from .generators import clipped_params
from .graph import RngStream
from .sbm import fit_sbm
from .sources import SbmSource, make_source
from .twosample import prepare_sample, test_from_graphs

logger = logging.getLogger(__name__)

# Common false-positive-rate grid for averaging ROC curves across outer draws.
FPR_GRID = np.linspace(0.0, 1.0, 101)

# Root stream keys of the experiment kinds.
POWER_KEY = 0
ROC_KEY = 1
PILOT_KEY = 2
SELECT_K_KEY = 3


@dataclass(frozen=True, eq=False)
class RocCurve:
    """ROC points sorted from ``(0, 0)`` to ``(1, 1)`` and their trapezoidal area."""

    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    @classmethod
    def from_points(cls, fpr, tpr):
        fpr = np.asarray(fpr, dtype=float)
        tpr = np.asarray(tpr, dtype=float)
        return cls(fpr, tpr, float(auc(fpr, tpr)))

    @classmethod
    def from_scores(cls, null_scores, alternative_scores):
        """ROC of the rule "reject when the score exceeds a threshold"."""
        labels = np.concatenate([np.zeros(len(null_scores)), np.ones(len(alternative_scores))])
        scores = np.concatenate([null_scores, alternative_scores])
        fpr, tpr, _ = roc_curve(labels, scores, drop_intermediate=False)
        return cls.from_points(fpr, tpr)

    def upper_envelope(self):
        """Distinct FPR values with the largest TPR reached at each."""
        fpr, index = np.unique(self.fpr, return_inverse=True)
        tpr = np.zeros(fpr.size)
        np.maximum.at(tpr, index, self.tpr)
        return fpr, tpr

    @classmethod
    def average(cls, curves):
        """Mean ROC: TPR averaged over a common FPR grid, pinned to (0, 0) and (1, 1).

        At a vertical step the curve takes its top value.
        """
        if len(curves) == 1:
            return curves[0]
        tpr = np.mean([np.interp(FPR_GRID, *curve.upper_envelope()) for curve in curves], axis=0)
        tpr[0] = 0.0
        tpr[-1] = 1.0
        return cls.from_points(FPR_GRID.copy(), tpr)


@dataclass(frozen=True)
class PowerRow:
    """Rejection rate of one method at one grid point, with its binomial standard error."""

    method: str
    param: str
    power: float
    se: float


def grid_label(overrides):
    """Short label of a grid row, e.g. ``n=100;alternative.eps=0.05``."""
    if not overrides:
        return "default"
    parts = []
    for key, value in overrides.items():
        if isinstance(value, dict):
            parts.extend(f"{key}.{sub}={value[sub]}" for sub in value)
        else:
            parts.append(f"{key}={value}")
    return ";".join(parts)


def _safe_statistic(sample1, sample2, k, stream):
    """SBM-TS statistic, or 0 when the fit leaves no informative block."""
    try:
        return test_from_graphs(sample1, sample2, k, stream).statistic
    except NumericalError as e:
        logger.warning(f"Select-K: k={k} replicate scored 0 ({e})")
        return 0.0


def bootstrap_problem(sample, k0, perturbation, stream):
    """Null and alternative SBMs fitted to ``sample`` for choosing ``k``.

    A ``k0``-block SBM is fitted to every network and the fits are aligned. The
    alternative adds ``perturbation * max|B| * Unif(0, 1)`` noise to each entry on
    or above the diagonal and mirrors it.

    Returns
    -------
    null, alternative : SbmParams
    """
    k0 = min(k0, min(graph.n for graph in sample))
    labels = [fit_sbm(graph, k0, stream.spawn(0, t)).labels for t, graph in enumerate(sample)]
    prep = prepare_sample(sample, labels, stream.spawn(1))
    counts = sum(z.counts()[sigma] for z, sigma in zip(prep.labels, prep.perms, strict=True))
    pi = counts / counts.sum()

    bhat = prep.bhat
    noise = np.triu(perturbation * np.abs(bhat).max() * stream.spawn(2).generator.random(bhat.shape))
    alternative = bhat + noise + np.triu(noise, 1).T

    return clipped_params(bhat, pi), clipped_params(alternative, pi)


def select_k(sample, k0=10, kmax=10, perturbation=0.1, replicates=20, stream=None, executor=None):
    """Choose the number of communities by a parametric bootstrap.

    Parameters
    ----------
    sample : list of Graph
    k0 : int
        Communities of the pilot fit.
    kmax : int
        Largest candidate ``k``.
    perturbation : float
        Noise scale of the alternative connectivity matrix.
    replicates : int
        Null and alternative problems per candidate.
    stream : RngStream
    executor : concurrent.futures.Executor, optional

    Returns
    -------
    k : int
        The candidate with the largest AUC; ties go to the smallest.
    aucs : numpy.ndarray
        AUC of every candidate ``1..kmax``.
    """
    if stream is None:
        raise ConfigError("select_k needs an RngStream")
    if not sample:
        raise ConfigError("select_k needs at least one network")
    null, alternative = bootstrap_problem(sample, k0, perturbation, stream.spawn(0))
    n = int(round(np.mean([graph.n for graph in sample])))
    size = len(sample)
    source = SbmSource(null, alternative, n, size, size)
    kmax = min(kmax, n)

    def replicate(i):
        base = stream.spawn(1, i)
        null_pair = source.draw(Hypothesis.NULL, base.spawn(0))
        alternative_pair = source.draw(Hypothesis.ALTERNATIVE, base.spawn(1))
        scores = np.zeros((kmax, 2))
        for k in range(1, kmax + 1):
            scores[k - 1, 0] = _safe_statistic(*null_pair, k, base.spawn(2, k))
            scores[k - 1, 1] = _safe_statistic(*alternative_pair, k, base.spawn(3, k))
        return scores

    mapper = map if executor is None else executor.map
    scores = np.stack(list(mapper(replicate, range(replicates))))
    aucs = np.array([RocCurve.from_scores(scores[:, k, 0], scores[:, k, 1]).auc for k in range(kmax)])
    chosen = int(np.argmax(aucs)) + 1
    logger.info(f"Select-K: chose k={chosen} (AUC {aucs[chosen - 1]:.3f})")
    return chosen, aucs


class ExperimentManager:
    """Runs Monte Carlo experiments described by an ``ExperimentConfig``."""

    def __init__(self, config, threads=None, classes=None):
        """Initialize the experiment manager.

        Parameters
        ----------
        config : ExperimentConfig
            The experiment configuration.
        threads : int, optional
            Worker threads; overrides ``config.threads``.
        classes : dict, optional
            Preloaded data classes for the files model.
        """
        self.config = config
        self.threads = threads or config.threads or os.cpu_count() or 1
        self.classes = classes
        self._executor = None
        self._k = None
        # Per-row managers of the last grid run
        self._rows = []

        # Method handlers (lazy, they need the resolved k)
        self._sbmts = None
        self._nclm = None
        self._ase_mmd = None

    @property
    def k(self):
        """Number of communities, selected by bootstrap when configured as ``"auto"``."""
        if self._k is None:
            self._k = self._resolve_k()
        return self._k

    @property
    def sbmts(self):
        """Get the SBM-TS handler (lazy initialization).

        Returns
        -------
        SbmTsMethod
            The test handler.
        """
        if self._sbmts is None:
            from .methods import SbmTsMethod

            self._sbmts = SbmTsMethod(self.config, self.k)
        return self._sbmts

    @property
    def nclm(self):
        """Get the NCLM handler (lazy initialization).

        Returns
        -------
        NclmMethod
            The distance handler.
        """
        if self._nclm is None:
            from .methods import NclmMethod

            self._nclm = NclmMethod(self.config)
        return self._nclm

    @property
    def ase_mmd(self):
        """Get the ASE-MMD handler (lazy initialization).

        Returns
        -------
        AseMmdMethod
            The distance handler.
        """
        if self._ase_mmd is None:
            from .methods import AseMmdMethod

            self._ase_mmd = AseMmdMethod(self.config, self.k)
        return self._ase_mmd

    @property
    def executor(self):
        """The worker pool, or ``None`` before ``start()``."""
        return self._executor

    def method(self, name):
        return getattr(self, name)

    def diagnostics(self):
        """Counters for the output metadata of the experiments run so far.

        Returns
        -------
        dict
            ``nclm_floored``: moments floored by NCLM over every scored network,
            present once NCLM has run.
        """
        handlers = [manager._nclm for manager in (self, *self._rows) if manager._nclm is not None]
        if not handlers:
            return {}
        floored = sum(handler.floored for handler in handlers)
        if floored:
            logger.info(f"Experiment: NCLM floored {floored} moments")
        return {"nclm_floored": floored}

    def start(self):
        """Start the replicate worker pool."""
        if self._executor is not None:
            return
        self._executor = ThreadPoolExecutor(max_workers=self.threads)
        logger.info(f"Experiment: started {self.threads} worker thread(s)")

    def stop(self):
        """Shut the worker pool down."""
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None
            logger.debug("Experiment: worker pool stopped")

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()

    def _map(self, function, items):
        if self._executor is None:
            return list(map(function, items))
        return list(self._executor.map(function, items))

    def source(self):
        """Build the sample source; raises ``ConfigError`` before any computation."""
        k = self.k if self.config.model == "random_b" else None
        return make_source(self.config, k=k, classes=self.classes)

    def _resolve_k(self):
        if self.config.k != "auto":
            return self.config.k
        settings = self.config.select_k
        pilot = make_source(self.config, k=settings["k0"], classes=self.classes)
        stream = RngStream(self.config.seed).spawn(PILOT_KEY)
        sample, _ = pilot.outer(stream.spawn(0)).draw(Hypothesis.NULL, stream.spawn(1))
        k, _ = select_k(
            sample,
            settings["k0"],
            settings["kmax"],
            settings["perturbation"],
            settings["replicates"],
            stream.spawn(2),
        )
        return k

    def _scores(self, methods, sample1, sample2, stream):
        """Score one sample pair with every method; SBM-TS also reports its p-value."""
        scores = {}
        for index, name in enumerate(methods):
            handler = self.method(name)
            if name == "sbmts":
                try:
                    result = handler.test(sample1, sample2, stream.spawn(index))
                except NumericalError as e:
                    logger.warning(f"Experiment: SBM-TS replicate not rejected ({e})")
                    scores[name] = (0.0, 1.0)
                    continue
                scores[name] = (result.statistic, result.p_value)
            else:
                scores[name] = (handler.apply(sample1, sample2, stream.spawn(index)), None)
        return scores

    def run_power(self):
        """Rejection rates of every method at every grid point.

        SBM-TS rejects when its p-value is below ``level``. Baselines have no null
        law, so each replicate also scores a null pair and a baseline rejects when
        its score exceeds the empirical ``1 - level`` quantile of those null scores.

        Returns
        -------
        list of PowerRow
            One row per method and grid point.
        """
        config = self.config
        rows = config.grid or [{}]
        if config.grid:
            managers = [ExperimentManager(config.with_overrides(row), self.threads, self.classes) for row in rows]
            self._rows = managers
        else:
            managers = [self]
        sources = [manager.source() for manager in managers]
        methods = config.methods

        table = []
        for index, (row, manager, source) in enumerate(zip(rows, managers, sources, strict=True)):
            for name in methods:
                manager.method(name)
            stream = RngStream(manager.config.seed).spawn(POWER_KEY, index)
            outcomes = self._map(partial(manager.power_replicate, source, stream), range(manager.config.replicates))
            label = grid_label(row)
            for name in methods:
                rejected = self._rejections(name, outcomes, manager.config.level)
                power = float(np.mean(rejected))
                se = float(np.sqrt(power * (1 - power) / len(rejected)))
                table.append(PowerRow(name, label, power, se))
            logger.info(f"Power: grid point {index + 1}/{len(rows)} done")
        return table

    def power_replicate(self, source, stream, i):
        """Scores of replicate ``i``: the observed pair, and a null pair for the baselines."""
        stream = stream.spawn(i)
        methods = self.config.methods
        source = source.outer(stream.spawn(0))
        observed = self._scores(methods, *source.draw(self.config.hypothesis, stream.spawn(1)), stream.spawn(2))
        null = None
        baselines = [name for name in methods if name != "sbmts"]
        if baselines:
            null = self._scores(baselines, *source.draw(Hypothesis.NULL, stream.spawn(3)), stream.spawn(4))
        return observed, null

    @staticmethod
    def _rejections(name, outcomes, level):
        if name == "sbmts":
            return np.array([observed[name][1] < level for observed, _ in outcomes])
        null_scores = np.array([null[name][0] for _, null in outcomes])
        threshold = np.quantile(null_scores, 1 - level, method="higher")
        return np.array([observed[name][0] > threshold for observed, _ in outcomes])

    def run_roc(self):
        """Mean ROC curve of every method.

        Each replicate scores one null pair and one alternative pair; the threshold
        sweeps the pooled scores. With several outer draws (random connectivity
        matrices) the curves are averaged on a common FPR grid.

        Returns
        -------
        dict
            Method name to ``RocCurve``.
        """
        config = self.config
        source = self.source()
        methods = config.methods
        root = RngStream(config.seed).spawn(ROC_KEY)
        for name in methods:
            self.method(name)

        curves = {name: [] for name in methods}
        for draw in range(config.outer_draws):
            stream = root.spawn(draw)
            experiment = source.outer(stream.spawn(0))

            def replicate(i, experiment=experiment, stream=stream):
                base = stream.spawn(1, i)
                null = self._scores(methods, *experiment.draw(Hypothesis.NULL, base.spawn(0)), base.spawn(1))
                alternative = self._scores(
                    methods, *experiment.draw(Hypothesis.ALTERNATIVE, base.spawn(2)), base.spawn(3)
                )
                return null, alternative

            outcomes = self._map(replicate, range(config.replicates))
            for name in methods:
                null_scores = [null[name][0] for null, _ in outcomes]
                alternative_scores = [alternative[name][0] for _, alternative in outcomes]
                curves[name].append(RocCurve.from_scores(null_scores, alternative_scores))
            logger.info(f"ROC: outer draw {draw + 1}/{config.outer_draws} done")

        return {name: RocCurve.average(curves[name]) for name in methods}

    def select_k(self, sample):
        """Choose ``k`` for ``sample`` with the configured bootstrap settings."""
        settings = self.config.select_k
        return select_k(
            sample,
            settings["k0"],
            settings["kmax"],
            settings["perturbation"],
            settings["replicates"],
            RngStream(self.config.seed).spawn(SELECT_K_KEY),
            executor=self._executor,
        )
