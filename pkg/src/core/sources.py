# vim: set expandtab shiftwidth=4 softtabstop=4:

"""Sample sources: draw pairs of network samples under either hypothesis.

A source turns the model section of an :class:`ExperimentConfig` into pairs
``(sample1, sample2)``. Sample 1 always comes from the null model; sample 2 comes
from the null or the alternative model. Sample ``r`` of a draw uses
``stream.spawn(r)`` and its network ``t`` uses ``stream.spawn(r, t)``.
"""

import logging

import numpy as np

from .config import Hypothesis
from .errors import ConfigError, DataError
from .generators import (
    RDPG_ROTATION,
    GaussianLatent,
    GaussianMixtureLatent,
    PointMassLatent,
    RdpgSpec,
    clipped_params,
    perturb_connectivity,
    perturb_graphon,
    random_connectivity,
    sample_graphon,
    sample_rdpg,
    sample_sbm,
    smooth_graphon,
    two_block_params,
    uniform_prior,
)
from .sbm import SbmParams

logger = logging.getLogger(__name__)


class Source:
    """Base class: draws two samples of ``n1`` and ``n2`` networks with ``n`` nodes."""

    name = "source"

    def __init__(self, n, n1, n2):
        self.n = n
        self.n1 = n1
        self.n2 = n2

    def model(self, hypothesis):
        """Model the second sample is drawn from under ``hypothesis``."""
        raise NotImplementedError

    def sample_one(self, model, stream):
        """Draw one network; returns ``(graph, labels)`` with ``labels`` possibly ``None``."""
        raise NotImplementedError

    def outer(self, stream):
        """Source for one outer experiment draw; fixed sources return themselves."""
        return self

    def draw_labeled(self, hypothesis, stream):
        """Draw a sample pair keeping true labels where the model has them.

        Returns
        -------
        tuple of list
            Two lists of ``(graph, labels)`` pairs.
        """
        hypothesis = Hypothesis(hypothesis)
        null = self.model(Hypothesis.NULL)
        second = self.model(hypothesis)
        first = [self.sample_one(null, stream.spawn(1, t)) for t in range(self.n1)]
        other = [self.sample_one(second, stream.spawn(2, t)) for t in range(self.n2)]
        return first, other

    def draw(self, hypothesis, stream):
        """Draw a sample pair.

        Parameters
        ----------
        hypothesis : Hypothesis
            Law of the second sample.
        stream : RngStream

        Returns
        -------
        tuple of list of Graph
        """
        first, other = self.draw_labeled(hypothesis, stream)
        return [graph for graph, _ in first], [graph for graph, _ in other]

    def describe(self, hypothesis):
        """JSON-friendly description of the model used under ``hypothesis``."""
        return {"source": self.name, "hypothesis": Hypothesis(hypothesis).name.lower()}


def sbm_params(params, key="null"):
    """Build ``SbmParams`` from a config dict.

    Accepts ``{"B": ..., "pi": ...}`` or ``{"eps": e}`` for the two-block preset
    with diagonal ``0.5 + e``.
    """
    try:
        if "eps" in params and "B" not in params:
            return two_block_params(float(params["eps"]))
        b = np.asarray(params["B"], dtype=float)
        pi = params.get("pi")
        pi = uniform_prior(b.shape[0]) if pi is None else pi
        return SbmParams(b, pi)
    except KeyError as e:
        raise ConfigError(f"'{key}' is missing {e.args[0]!r}") from None
    except DataError as e:
        raise ConfigError(f"'{key}': {e}") from None


class PairSource(Source):
    """Source with one fixed null model and one fixed alternative model."""

    def __init__(self, null, alternative, n, n1, n2):
        super().__init__(n, n1, n2)
        self.null = null
        self.alternative = alternative

    def model(self, hypothesis):
        return self.alternative if hypothesis == Hypothesis.ALTERNATIVE else self.null


class SbmSource(PairSource):
    """Fixed null and alternative SBMs."""

    name = "sbm"

    def sample_one(self, model, stream):
        return sample_sbm(model, self.n, stream)

    def describe(self, hypothesis):
        return dict(super().describe(hypothesis), null=self.null.to_dict(), model=self.model(hypothesis).to_dict())


class RandomBSource(Source):
    """Random connectivity matrices, redrawn for every outer experiment.

    Each outer draw takes ``B`` with i.i.d. ``Unif(low, high)`` entries (symmetric)
    and ``B_eps = B + N(0, eps^2)`` noise (symmetric); the null model is
    ``SBM(rho B, uniform)`` and the alternative ``SBM(rho B_eps, uniform)``.
    """

    name = "random_b"

    def __init__(self, k, n, n1, n2, low=0.2, high=0.7, eps=0.05, rho=0.1):
        super().__init__(n, n1, n2)
        if not 0.0 <= low <= high <= 1.0:
            raise ConfigError(f"random_b needs 0 <= low <= high <= 1, got {low}, {high}")
        self.k = k
        self.low = low
        self.high = high
        self.eps = eps
        self.rho = rho

    def outer(self, stream):
        base = random_connectivity(self.k, stream.spawn(0), self.low, self.high)
        perturbed = perturb_connectivity(base, self.eps, stream.spawn(1))
        pi = uniform_prior(self.k)
        null = clipped_params(self.rho * base, pi)
        alternative = clipped_params(self.rho * perturbed, pi)
        return SbmSource(null, alternative, self.n, self.n1, self.n2)

    def model(self, hypothesis):
        raise ConfigError("random_b sources must be resolved with outer() before drawing")


def rdpg_spec(params, key):
    """Build an ``RdpgSpec`` from ``{"latent", "cov" | "point", "rho"}``."""
    latent = params.get("latent", "gaussian")
    rho = float(params.get("rho", 0.15))
    try:
        if latent == "gaussian":
            law = GaussianLatent(params["cov"])
        elif latent == "rotated_mixture":
            cov = np.asarray(params["cov"], dtype=float)
            law = GaussianMixtureLatent([cov, RDPG_ROTATION @ cov @ RDPG_ROTATION.T])
        elif latent == "point_mass":
            law = PointMassLatent(params["point"])
        else:
            raise ConfigError(f"'{key}': unknown latent law {latent!r}")
        return RdpgSpec(law, rho)
    except KeyError as e:
        raise ConfigError(f"'{key}' is missing {e.args[0]!r}") from None
    except DataError as e:
        raise ConfigError(f"'{key}': {e}") from None


class RdpgSource(PairSource):
    """Random dot product graphs; no true community labels."""

    name = "rdpg"

    def sample_one(self, model, stream):
        return sample_rdpg(model, self.n, stream), None


def graphon_spec(params, key):
    """Smooth graphon scaled by ``rho``, with an optional ``(eps, delta)`` band bump."""
    try:
        spec = smooth_graphon(float(params.get("rho", 1.0)))
        eps = float(params.get("eps", 0.0))
        if eps:
            spec = perturb_graphon(spec, eps, float(params.get("delta", 0.2)))
        return spec
    except DataError as e:
        raise ConfigError(f"'{key}': {e}") from None


class GraphonSource(PairSource):
    """Graphon samples; no true community labels."""

    name = "graphon"

    def sample_one(self, model, stream):
        return sample_graphon(model, self.n, stream), None


class FileSource(Source):
    """Subsets of real networks grouped into classes.

    Under the null both samples come from the null class; unless overlap is
    allowed the ``2m`` networks are drawn jointly without replacement, so the two
    subsets are disjoint. Under the alternative the second sample comes from the
    alternative class.
    """

    name = "files"

    def __init__(self, classes, null_class, alternative_class, m, allow_overlap=False):
        super().__init__(None, m, m)
        for label in (null_class, alternative_class):
            if label not in classes:
                raise ConfigError(f"Unknown data class {label!r}; have {', '.join(sorted(classes))}")
        self.classes = classes
        self.null_class = null_class
        self.alternative_class = alternative_class
        self.m = m
        self.allow_overlap = allow_overlap
        needed = m if allow_overlap else 2 * m
        if len(classes[null_class]) < needed:
            raise ConfigError(f"Class {null_class!r} has {len(classes[null_class])} networks, need {needed}")
        if len(classes[alternative_class]) < m:
            raise ConfigError(f"Class {alternative_class!r} has {len(classes[alternative_class])} networks, need {m}")

    def model(self, hypothesis):
        return self.alternative_class if hypothesis == Hypothesis.ALTERNATIVE else self.null_class

    def draw_labeled(self, hypothesis, stream):
        hypothesis = Hypothesis(hypothesis)
        pool = self.classes[self.null_class]
        m = self.m
        if hypothesis == Hypothesis.NULL and not self.allow_overlap:
            picks = stream.spawn(1).generator.choice(len(pool), size=2 * m, replace=False)
            first, second = picks[:m], picks[m:]
            other_pool = pool
        else:
            first = stream.spawn(1).generator.choice(len(pool), size=m, replace=False)
            other_pool = self.classes[self.model(hypothesis)]
            second = stream.spawn(2).generator.choice(len(other_pool), size=m, replace=False)
        return [(pool[i], None) for i in first], [(other_pool[i], None) for i in second]

    def describe(self, hypothesis):
        return dict(super().describe(hypothesis), null_class=self.null_class, model=self.model(hypothesis))


def make_source(config, k=None, classes=None):
    """Build the source the config describes.

    Parameters
    ----------
    config : ExperimentConfig
    k : int, optional
        Communities for ``random_b``; defaults to ``config.k``.
    classes : dict, optional
        Loaded data classes for the files model (``label -> list of Graph``).

    Raises
    ------
    ConfigError
        If the model parameters are invalid.
    """
    model = config.model
    if model == "sbm":
        null = sbm_params(config.null, "null")
        alternative = sbm_params(config.alternative, "alternative")
        if null.k != alternative.k:
            raise ConfigError("Null and alternative SBMs must have the same number of blocks")
        return SbmSource(null, alternative, config.n, config.n1, config.n2)
    if model == "random_b":
        k = config.k if k is None else k
        if k == "auto":
            raise ConfigError("random_b needs an explicit k")
        params = dict(config.null)
        unknown = sorted(set(params) - {"low", "high", "eps", "rho"})
        if unknown:
            raise ConfigError(f"Unknown random_b parameters: {', '.join(unknown)}")
        return RandomBSource(k, config.n, config.n1, config.n2, **{key: float(v) for key, v in params.items()})
    if model == "rdpg":
        return RdpgSource(
            rdpg_spec(config.null, "null"), rdpg_spec(config.alternative, "alternative"), config.n, config.n1, config.n2
        )
    if model == "graphon":
        return GraphonSource(
            graphon_spec(config.null, "null"),
            graphon_spec(config.alternative, "alternative"),
            config.n,
            config.n1,
            config.n2,
        )
    if model == "files":
        if classes is None:
            from .io import load_manifest

            classes = load_manifest(config.data)
        try:
            null_class = config.null["class"]
            alternative_class = config.alternative["class"]
        except KeyError:
            raise ConfigError("The files model needs {'class': ...} in 'null' and 'alternative'") from None
        return FileSource(classes, null_class, alternative_class, config.subset_size, config.allow_overlap)
    raise ConfigError(f"Unknown model {model!r}")
