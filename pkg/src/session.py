# vim: set expandtab shiftwidth=4 softtabstop=4:

import logging
import os

from .core.config import ExperimentConfig
from .core.graph import RngStream


class Session:
    """State shared by the commands of one command-line run.

    Holds the global flags, the experiment configuration and, once requested,
    the experiment manager with its worker pool.
    """

    def __init__(self, seed=None, threads=None, out=".", config=None, logger=None):
        """Initialize the session.

        Parameters
        ----------
        seed : int, optional
            Overrides the configured seed.
        threads : int, optional
            Worker threads; defaults to the configured value, else one per core.
        out : str
            Output directory, or ``"-"`` for standard output.
        config : ExperimentConfig, optional
            Defaults to ``ExperimentConfig()``.
        logger : logging.Logger, optional
        """
        self.config = config if config is not None else ExperimentConfig()
        if seed is not None:
            self.config.seed = seed
        self.threads = threads
        self.out = out
        self.logger = logger or logging.getLogger("sbmts")
        self._manager = None

    @property
    def seed(self):
        return self.config.seed

    @property
    def stream(self):
        """Root random stream of the run."""
        return RngStream(self.seed)

    @property
    def manager(self):
        """Experiment manager for the session config, started on first use."""
        if self._manager is None:
            from .core.experiment import ExperimentManager

            self._manager = ExperimentManager(self.config, threads=self.threads)
            self._manager.start()
        return self._manager

    def metadata(self):
        """Provenance block for every output of this run."""
        from .core.io import result_metadata

        return result_metadata(self.seed, self.config.config_hash())

    def output_path(self, name):
        """Where an output named ``name`` goes: inside ``out``, or ``"-"`` for stdout."""
        if self.out == "-":
            return "-"
        return os.path.join(self.out, name)

    def write(self, results, name, **extra):
        """Write results with this session's metadata, plus any ``extra`` entries."""
        from .core.io import write_results

        path = self.output_path(name)
        write_results(results, path, dict(self.metadata(), **extra))
        return path

    def close(self):
        """Stop the worker pool."""
        if self._manager is not None:
            self._manager.stop()
            self._manager = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
