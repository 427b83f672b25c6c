# vim: set expandtab shiftwidth=4 softtabstop=4:

import copy
import hashlib
import json
import os
from enum import IntEnum

from .errors import ConfigError


class Hypothesis(IntEnum):
    """Which hypothesis a replicate draws its second sample under."""

    NULL = 0
    ALTERNATIVE = 1


MODELS = ("sbm", "random_b", "rdpg", "graphon", "files")
METHODS = ("sbmts", "nclm", "ase_mmd")
SELF_NORMS = ("as_printed", "symmetric")


class ExperimentConfig:
    """Manages the settings of a Monte Carlo experiment."""

    DEFAULT_CONFIG = {
        "model": "sbm",
        "null": {"B": [[0.5, 0.2], [0.2, 0.5]], "pi": [0.4, 0.6]},
        "alternative": {"B": [[0.55, 0.2], [0.2, 0.55]], "pi": [0.4, 0.6]},
        "n": 300,  # nodes per network
        "n1": 1,  # networks in the first sample
        "n2": 1,  # networks in the second sample
        "k": 2,  # communities, or "auto" for bootstrap selection
        "replicates": 100,
        "outer_draws": 1,  # fresh parameter draws (random_b)
        "seed": 0,
        "level": 0.05,
        "methods": ["sbmts"],
        "moments": 20,  # NCLM moment order J
        "bandwidth": 1.0,  # MMD kernel bandwidth sigma^2
        "embedding_dim": None,  # ASE dimension, None means k
        "features": 0,  # random Fourier features, 0 means exact MMD
        "mmd_self_norm": "as_printed",
        "grid": [],  # list of override dicts, one power-table row each
        "hypothesis": "alternative",
        "data": None,  # manifest path for the files model
        "subset_size": 5,
        "allow_overlap": False,
        "select_k": {"k0": 10, "kmax": 10, "perturbation": 0.1, "replicates": 20},
        "threads": None,
    }

    # Keys whose value is itself a dict of free-form model parameters.
    PARAMETER_KEYS = ("null", "alternative", "select_k")

    def __init__(self, path=None):
        """Initialize the configuration.

        Parameters
        ----------
        path : str, optional
            JSON file to load on top of the defaults.
        """
        self._config = copy.deepcopy(self.DEFAULT_CONFIG)
        self._path = None
        if path is not None:
            self.load_from(path)

    @property
    def path(self):
        """File the configuration was loaded from, if any."""
        return self._path

    def save_to(self, path):
        """Save the configuration to a JSON file.

        Parameters
        ----------
        path : str
            Destination file path. A leading ``~`` is expanded.
        """
        path = os.path.expanduser(path)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self._config, f, indent=2, sort_keys=True)

    def load_from(self, path):
        """Load configuration from a JSON file.

        Values are validated before anything is applied, so a rejected file leaves
        the configuration unchanged.

        Parameters
        ----------
        path : str
            Source file path. A leading ``~`` is expanded.

        Raises
        ------
        ConfigError
            If the file is unreadable, not a JSON object, has unknown keys, or holds
            an invalid value.
        """
        path = os.path.expanduser(path)
        try:
            with open(path, encoding="utf-8") as f:
                loaded = json.load(f)
        except OSError as e:
            raise ConfigError(f"Cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from e

        if not isinstance(loaded, dict):
            raise ConfigError("Experiment config file must contain a JSON object")

        data = loaded.get("data")
        if isinstance(data, str) and not os.path.isabs(os.path.expanduser(data)):
            loaded = dict(loaded, data=os.path.join(os.path.dirname(os.path.abspath(path)), data))

        self.from_dict(loaded)
        self._path = path

    def to_dict(self):
        """Export the configuration.

        Returns
        -------
        dict
            A deep copy of the settings.
        """
        return copy.deepcopy(self._config)

    def from_dict(self, data):
        """Apply settings from a dict.

        Parameters
        ----------
        data : dict
            Any subset of the keys of ``DEFAULT_CONFIG``.

        Raises
        ------
        ConfigError
            On unknown keys or invalid values; nothing is applied in that case.
        """
        unknown = sorted(set(data) - set(self.DEFAULT_CONFIG))
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")

        staged = ExperimentConfig.__new__(ExperimentConfig)
        staged._config = copy.deepcopy(self._config)
        staged._path = self._path
        for key, value in data.items():
            setattr(staged, key, value)
        staged.check_files()
        self._config = staged._config

    def with_overrides(self, overrides):
        """Return a copy with ``overrides`` applied (used for power-table grids)."""
        other = ExperimentConfig()
        other._config = copy.deepcopy(self._config)
        other._path = self._path
        other.from_dict(overrides)
        return other

    def config_hash(self):
        """First 16 hex digits of the SHA-256 of the canonical JSON form."""
        canonical = json.dumps(self._config, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def check_files(self):
        """Verify that referenced data files exist.

        Raises
        ------
        ConfigError
            If the files model is selected without an existing manifest.
        """
        if self._config["model"] != "files":
            return
        data = self._config["data"]
        if data is None:
            raise ConfigError("The files model needs a 'data' manifest path")
        if not os.path.exists(os.path.expanduser(data)):
            raise ConfigError(f"Data path does not exist: {data}")

    # Validation helpers

    @staticmethod
    def _positive_int(key, value, minimum=1):
        if isinstance(value, bool) or not isinstance(value, int | float) or int(value) != value:
            raise ConfigError(f"'{key}' must be an integer, got {value!r}")
        if value < minimum:
            raise ConfigError(f"'{key}' must be at least {minimum}, got {value}")
        return int(value)

    @staticmethod
    def _choice(key, value, choices):
        if value not in choices:
            raise ConfigError(f"'{key}' must be one of {', '.join(choices)}, got {value!r}")
        return value

    @staticmethod
    def _mapping(key, value):
        if not isinstance(value, dict):
            raise ConfigError(f"'{key}' must be an object, got {value!r}")
        return copy.deepcopy(value)

    # Settings

    @property
    def model(self):
        """Generative model: sbm, random_b, rdpg, graphon or files."""
        return self._config["model"]

    @model.setter
    def model(self, value):
        self._config["model"] = self._choice("model", value, MODELS)

    @property
    def null(self):
        """Model parameters of the null hypothesis.

        Returns
        -------
        dict
            Keys depend on ``model``.
        """
        return self._config["null"]

    @null.setter
    def null(self, value):
        self._config["null"] = self._mapping("null", value)

    @property
    def alternative(self):
        """Model parameters the second sample uses under the alternative."""
        return self._config["alternative"]

    @alternative.setter
    def alternative(self, value):
        self._config["alternative"] = self._mapping("alternative", value)

    @property
    def n(self):
        return self._config["n"]

    @n.setter
    def n(self, value):
        self._config["n"] = self._positive_int("n", value)

    @property
    def n1(self):
        """Networks in the first sample."""
        return self._config["n1"]

    @n1.setter
    def n1(self, value):
        self._config["n1"] = self._positive_int("n1", value)

    @property
    def n2(self):
        """Networks in the second sample."""
        return self._config["n2"]

    @n2.setter
    def n2(self, value):
        self._config["n2"] = self._positive_int("n2", value)

    @property
    def k(self):
        """Number of communities (positive int) or ``"auto"``."""
        return self._config["k"]

    @k.setter
    def k(self, value):
        self._config["k"] = value if value == "auto" else self._positive_int("k", value)

    @property
    def replicates(self):
        return self._config["replicates"]

    @replicates.setter
    def replicates(self, value):
        self._config["replicates"] = self._positive_int("replicates", value)

    @property
    def outer_draws(self):
        return self._config["outer_draws"]

    @outer_draws.setter
    def outer_draws(self, value):
        self._config["outer_draws"] = self._positive_int("outer_draws", value)

    @property
    def seed(self):
        return self._config["seed"]

    @seed.setter
    def seed(self, value):
        value = self._positive_int("seed", value, minimum=0)
        if value >= 2**64:
            raise ConfigError(f"'seed' must fit in 64 bits, got {value}")
        self._config["seed"] = value

    @property
    def level(self):
        """Rejection level, strictly between 0 and 1."""
        return self._config["level"]

    @level.setter
    def level(self, value):
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"'level' must be a number, got {value!r}") from None
        if not 0.0 < value < 1.0:
            raise ConfigError(f"'level' must lie in (0, 1), got {value}")
        self._config["level"] = value

    @property
    def methods(self):
        """Tests to run, a non-empty subset of sbmts, nclm and ase_mmd."""
        return list(self._config["methods"])

    @methods.setter
    def methods(self, value):
        if isinstance(value, str):
            value = [value]
        if not value:
            raise ConfigError("'methods' must name at least one method")
        for method in value:
            self._choice("methods", method, METHODS)
        self._config["methods"] = list(dict.fromkeys(value))

    @property
    def moments(self):
        return self._config["moments"]

    @moments.setter
    def moments(self, value):
        self._config["moments"] = self._positive_int("moments", value)

    @property
    def bandwidth(self):
        return self._config["bandwidth"]

    @bandwidth.setter
    def bandwidth(self, value):
        if isinstance(value, bool) or not isinstance(value, int | float) or value <= 0:
            raise ConfigError(f"'bandwidth' must be a positive number, got {value!r}")
        self._config["bandwidth"] = float(value)

    @property
    def embedding_dim(self):
        return self._config["embedding_dim"]

    @embedding_dim.setter
    def embedding_dim(self, value):
        self._config["embedding_dim"] = None if value is None else self._positive_int("embedding_dim", value)

    @property
    def features(self):
        return self._config["features"]

    @features.setter
    def features(self, value):
        self._config["features"] = self._positive_int("features", value, minimum=0)

    @property
    def mmd_self_norm(self):
        return self._config["mmd_self_norm"]

    @mmd_self_norm.setter
    def mmd_self_norm(self, value):
        self._config["mmd_self_norm"] = self._choice("mmd_self_norm", value, SELF_NORMS)

    @property
    def grid(self):
        """Override dicts, one per power-table row; empty means a single row."""
        return copy.deepcopy(self._config["grid"])

    @grid.setter
    def grid(self, value):
        if not isinstance(value, list) or not all(isinstance(row, dict) for row in value):
            raise ConfigError("'grid' must be a list of objects")
        for row in value:
            nested = sorted(set(row) & {"grid"})
            unknown = sorted(set(row) - set(self.DEFAULT_CONFIG))
            if unknown or nested:
                raise ConfigError(f"Unknown grid keys: {', '.join(unknown + nested)}")
        self._config["grid"] = copy.deepcopy(value)

    @property
    def hypothesis(self):
        """Hypothesis of the power run, as a ``Hypothesis``."""
        return Hypothesis.NULL if self._config["hypothesis"] == "null" else Hypothesis.ALTERNATIVE

    @hypothesis.setter
    def hypothesis(self, value):
        if isinstance(value, Hypothesis):
            value = value.name.lower()
        self._config["hypothesis"] = self._choice("hypothesis", value, ("null", "alternative"))

    @property
    def data(self):
        return self._config["data"]

    @data.setter
    def data(self, value):
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"'data' must be a path, got {value!r}")
        self._config["data"] = value

    @property
    def subset_size(self):
        """Networks per sample drawn from a data class."""
        return self._config["subset_size"]

    @subset_size.setter
    def subset_size(self, value):
        self._config["subset_size"] = self._positive_int("subset_size", value)

    @property
    def allow_overlap(self):
        return self._config["allow_overlap"]

    @allow_overlap.setter
    def allow_overlap(self, value):
        self._config["allow_overlap"] = bool(value)

    @property
    def select_k(self):
        """Bootstrap settings for choosing ``k``: k0, kmax, perturbation, replicates."""
        return dict(self._config["select_k"])

    @select_k.setter
    def select_k(self, value):
        value = self._mapping("select_k", value)
        merged = dict(self.DEFAULT_CONFIG["select_k"])
        unknown = sorted(set(value) - set(merged))
        if unknown:
            raise ConfigError(f"Unknown select_k keys: {', '.join(unknown)}")
        merged.update(value)
        for key in ("k0", "kmax", "replicates"):
            merged[key] = self._positive_int(f"select_k.{key}", merged[key])
        if not 0.0 < float(merged["perturbation"]) < 1.0:
            raise ConfigError(f"'select_k.perturbation' must lie in (0, 1), got {merged['perturbation']}")
        self._config["select_k"] = merged

    @property
    def threads(self):
        """Worker threads; ``None`` means one per logical core."""
        return self._config["threads"]

    @threads.setter
    def threads(self, value):
        self._config["threads"] = None if value is None else self._positive_int("threads", value)
