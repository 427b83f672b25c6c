# vim: set expandtab shiftwidth=4 softtabstop=4:

"""Reading network samples and writing experiment results."""

import csv
import json
import logging
import os
import sys
from contextlib import contextmanager
from datetime import datetime, timezone
from enum import Enum

import numpy as np

from .errors import ConfigError, DataError
from .experiment import PowerRow, RocCurve
from .graph import read_edge_list

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".json"
SIDECAR_SUFFIX = ".meta.json"
# Metadata that differs between otherwise identical runs.
VOLATILE_KEYS = ("timestamp",)


def _read_graph(path):
    try:
        return read_edge_list(path)
    except OSError as e:
        raise DataError(f"Cannot read {path}: {e}") from e


def _list_directory(path):
    names = sorted(name for name in os.listdir(path) if not name.startswith("."))
    files = [os.path.join(path, name) for name in names if os.path.isfile(os.path.join(path, name))]
    if not files:
        raise DataError(f"No edge-list files in {path}")
    return files


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise DataError(f"Cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from e


def _manifest_entry(base, label, entry):
    if isinstance(entry, str):
        directory = os.path.join(base, entry)
        if not os.path.isdir(directory):
            raise DataError(f"Class {label!r}: {directory} is not a directory")
        return _list_directory(directory)
    if isinstance(entry, list) and entry and all(isinstance(name, str) for name in entry):
        return [os.path.join(base, name) for name in entry]
    raise DataError(f"Class {label!r} must list edge-list files or name a directory")


def load_manifest(path):
    """Load every class of a manifest.

    The manifest is a JSON object ``{"classes": {label: [file, ...] | directory}}``;
    relative paths are resolved against the manifest's directory.

    Parameters
    ----------
    path : str
        Manifest file.

    Returns
    -------
    dict
        Class label to list of ``Graph``, in the listed (or filename) order.

    Raises
    ------
    DataError
        If the manifest or one of its files is malformed.
    """
    path = os.path.expanduser(path)
    manifest = _read_json(path)
    classes = manifest.get("classes") if isinstance(manifest, dict) else None
    if not isinstance(classes, dict) or not classes:
        raise DataError(f"{path}: manifest needs a non-empty 'classes' object")
    base = os.path.dirname(os.path.abspath(path))
    loaded = {}
    for label, entry in classes.items():
        loaded[label] = [_read_graph(file) for file in _manifest_entry(base, label, entry)]
        logger.info(f"Data: class {label!r} has {len(loaded[label])} networks")
    return loaded


def load_sample(path, label=None):
    """Load a sample of networks.

    Parameters
    ----------
    path : str
        A directory (one edge list per file, sorted by filename), a single edge
        list, or a manifest.
    label : str, optional
        Class to take from a manifest; may be omitted when it has one class.

    Returns
    -------
    list of Graph

    Raises
    ------
    DataError
        On missing paths or files that do not parse.
    """
    path = os.path.expanduser(path)
    if os.path.isdir(path):
        return [_read_graph(file) for file in _list_directory(path)]
    if not os.path.exists(path):
        raise DataError(f"No such file or directory: {path}")
    if not path.endswith(MANIFEST_SUFFIX):
        return [_read_graph(path)]

    classes = load_manifest(path)
    if label is None:
        if len(classes) != 1:
            raise ConfigError(f"{path} has classes {', '.join(sorted(classes))}; pick one")
        (label,) = classes
    if label not in classes:
        raise ConfigError(f"{path} has no class {label!r}")
    return classes[label]


def read_matrix(path, key="B"):
    """Read a square matrix from JSON, either a bare nested list or ``{key: ...}``."""
    data = _read_json(os.path.expanduser(path))
    if isinstance(data, dict):
        if key not in data:
            raise DataError(f"{path}: missing {key!r}")
        data = data[key]
    try:
        matrix = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise DataError(f"{path}: {key!r} is not a numeric matrix") from None
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DataError(f"{path}: expected a square matrix, got shape {matrix.shape}")
    return matrix


def result_metadata(seed, config_hash, version=None):
    """Provenance block embedded in every output."""
    if version is None:
        from .. import __version__ as version
    return {
        "seed": seed,
        "config_hash": config_hash,
        "version": version,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _to_json(value):
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Enum):
        return value.name.lower()
    if isinstance(value, RocCurve):
        return {"fpr": value.fpr.tolist(), "tpr": value.tpr.tolist(), "auc": value.auc}
    if isinstance(value, PowerRow):
        return {"method": value.method, "param": value.param, "power": value.power, "se": value.se}
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


@contextmanager
def _open_output(path, newline=None):
    if path == "-":
        yield sys.stdout
        return
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline=newline) as f:
        yield f


def sidecar_path(path):
    """Metadata file kept next to a CSV output: ``roc.csv`` -> ``roc.meta.json``."""
    return os.path.splitext(path)[0] + SIDECAR_SUFFIX


def _write_csv(header, rows, path, metadata):
    """CSV with every metadata key but the timestamp as ``#`` lines.

    The full metadata goes to the sidecar, so reruns with one seed give identical CSVs.
    """
    with _open_output(path, newline="") as f:
        for key, value in metadata.items():
            if key not in VOLATILE_KEYS:
                f.write(f"# {key}={value}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    if path != "-":
        with _open_output(sidecar_path(path)) as f:
            json.dump(metadata, f, indent=2, sort_keys=True, default=_to_json)
            f.write("\n")


def write_results(results, path, metadata):
    """Write results with their provenance.

    A ``RocCurve`` becomes a ``fpr,tpr`` CSV with the AUC among the ``#`` header
    lines; a list of ``PowerRow`` becomes a ``method,param,power,se`` CSV. CSV files
    leave the timestamp to a ``.meta.json`` sidecar. Anything else is written as
    ``{"metadata": ..., "data": ...}`` JSON. ``path="-"`` writes to standard output.

    Parameters
    ----------
    results : RocCurve, list of PowerRow, or JSON-compatible data
    path : str
    metadata : dict
        Seed, config hash, version and timestamp (see :func:`result_metadata`).

    Raises
    ------
    OSError
        If the destination cannot be written.
    """
    if isinstance(results, RocCurve):
        points = zip(results.fpr.tolist(), results.tpr.tolist(), strict=True)
        _write_csv(("fpr", "tpr"), points, path, dict(metadata, auc=results.auc))
    elif isinstance(results, list) and results and all(isinstance(row, PowerRow) for row in results):
        rows = [(row.method, row.param, row.power, row.se) for row in results]
        _write_csv(("method", "param", "power", "se"), rows, path, metadata)
    else:
        with _open_output(path) as f:
            json.dump({"metadata": metadata, "data": results}, f, indent=2, sort_keys=True, default=_to_json)
            f.write("\n")
    if path != "-":
        logger.info(f"Results: wrote {path}")


def read_csv_results(path):
    """Read a CSV written by :func:`write_results`.

    Returns
    -------
    metadata : dict
        The ``#`` header lines as strings.
    rows : list of dict
    """
    metadata = {}
    with open(path, encoding="utf-8", newline="") as f:
        lines = f.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            metadata[key] = value
        else:
            body.append(line)
    return metadata, list(csv.DictReader(body))
