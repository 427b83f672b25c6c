# vim: set expandtab shiftwidth=4 softtabstop=4:

import numpy as np
import pytest

from sbmts.core.config import ExperimentConfig
from sbmts.core.generators import sample_sbm
from sbmts.core.graph import RngStream, write_edge_list
from sbmts.core.sbm import SbmParams

# Well separated two-block model with an asymmetric diagonal, so its
# eigen-structure determines the community labels.
SEPARATED_B = [[0.5, 0.2], [0.2, 0.7]]
SEPARATED_PI = [0.4, 0.6]


@pytest.fixture
def stream():
    return RngStream(12345)


@pytest.fixture
def separated():
    return SbmParams(SEPARATED_B, SEPARATED_PI)


@pytest.fixture
def small_config():
    """Experiment settings that run in a couple of seconds."""
    config = ExperimentConfig()
    config.from_dict(
        {
            "null": {"B": SEPARATED_B, "pi": SEPARATED_PI},
            "alternative": {"B": [[0.3, 0.2], [0.2, 0.7]], "pi": SEPARATED_PI},
            "n": 80,
            "replicates": 4,
            "threads": 1,
        },
    )
    return config


def draw_sample(params, n, count, stream):
    """``count`` graphs of ``n`` nodes, graph ``t`` from ``stream.spawn(t)``."""
    return [sample_sbm(params, n, stream.spawn(t)) for t in range(count)]


def write_sample(directory, graphs):
    """Write ``graphs`` as ``graph_000.txt``, ``graph_001.txt``, ... under ``directory``."""
    directory.mkdir(parents=True, exist_ok=True)
    for t, graph in enumerate(graphs):
        write_edge_list(graph, directory / f"graph_{t:03d}.txt")
    return directory


def random_symmetric(k, generator):
    upper = np.triu(generator.uniform(0.05, 0.95, size=(k, k)))
    return upper + np.triu(upper, 1).T
