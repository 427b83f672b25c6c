# vim: set expandtab shiftwidth=4 softtabstop=4:

"""Command implementations and registration."""

import argparse
import logging
import os
import sys

from ..core.errors import ConfigError, SbmtsError

logger = logging.getLogger("sbmts")


def sbmts_gen(session, args):
    """Generate one sample pair from the configured model.

    Parameters
    ----------
    session : sbmts.session.Session
        The run session.
    args : argparse.Namespace
        ``hypothesis`` selects the law of the second sample.
    """
    from ..core.config import Hypothesis
    from ..core.graph import write_edge_list
    from ..core.sources import make_source

    if session.out == "-":
        raise ConfigError("gen writes edge-list files; --out must be a directory")
    config = session.config
    if config.model == "files":
        raise ConfigError("gen needs a generative model, not 'files'")
    hypothesis = Hypothesis[args.hypothesis.upper()] if args.hypothesis else config.hypothesis
    source = make_source(config).outer(session.stream.spawn(0))
    first, second = source.draw_labeled(hypothesis, session.stream.spawn(1))

    labels = {}
    for name, sample in (("sample1", first), ("sample2", second)):
        directory = os.path.join(session.out, name)
        os.makedirs(directory, exist_ok=True)
        for t, (graph, z) in enumerate(sample):
            write_edge_list(graph, os.path.join(directory, f"graph_{t:03d}.txt"))
        labels[name] = [None if z is None else z.values.tolist() for _, z in sample]
    session.logger.info(f"Gen: wrote {len(first)} + {len(second)} networks to {session.out}")

    session.write({"description": source.describe(hypothesis), "labels": labels}, "gen.json")


def sbmts_fit(session, args):
    """Fit a ``k``-block SBM to every network of a sample.

    Parameters
    ----------
    session : sbmts.session.Session
        The run session.
    args : argparse.Namespace
        ``sample`` path and ``k``.
    """
    from ..core.io import load_sample
    from ..core.sbm import fit_sbm

    graphs = load_sample(args.sample)
    k = args.k or session.config.k
    if k == "auto":
        raise ConfigError("fit needs an explicit k")
    fits = []
    for t, graph in enumerate(graphs):
        fit = fit_sbm(graph, k, session.stream.spawn(t))
        fits.append({"labels": fit.labels.values.tolist(), "bhat": fit.bhat, "empty_mask": fit.empty_mask})
    session.logger.info(f"Fit: {len(graphs)} networks with k={k}")
    session.write(fits, "fit.json")


def sbmts_match(session, args):
    """Match two connectivity matrices.

    Parameters
    ----------
    session : sbmts.session.Session
        The run session.
    args : argparse.Namespace
        ``b1`` and ``b2`` JSON files and the matching ``method``.
    """
    from ..core.io import read_matrix
    from ..core.matching import dmatch_bruteforce, friendliness, lowrank_match, spectral_match

    b1 = read_matrix(args.b1)
    b2 = read_matrix(args.b2)
    if args.method == "bruteforce":
        value, sigma = dmatch_bruteforce(b1, b2)
        result = {"sigma": sigma, "residual": value}
    else:
        match = spectral_match(b1, b2) if args.method == "spectral" else lowrank_match(b1, b2)
        result = {
            "sigma": match.sigma,
            "signs": match.signs,
            "residual": match.residual,
            "sign_degenerate": match.sign_degenerate,
        }
        if match.sign_degenerate:
            session.logger.warning("Match: sign-degenerate input, the permutation may not be unique")
    friendly = friendliness(b1)
    result["friendliness"] = {"eta": friendly.eta, "theta": friendly.theta, "friendly": friendly.friendly}
    session.logger.info(f"Match: residual {result['residual']:.6g}")
    session.write(result, "match.json")


def sbmts_test(session, args):
    """Run the two-sample test on two samples of networks.

    Parameters
    ----------
    session : sbmts.session.Session
        The run session.
    args : argparse.Namespace
        ``sample1`` and ``sample2`` paths and ``k`` (an integer or ``auto``).
    """
    from ..core.io import load_sample
    from ..core.twosample import test_from_graphs

    sample1 = load_sample(args.sample1)
    sample2 = load_sample(args.sample2)
    k = args.k or session.config.k
    if k == "auto":
        k, _ = session.manager.select_k(sample1 + sample2)
    result = test_from_graphs(sample1, sample2, k, session.stream.spawn(0), executor=session.manager.executor)
    session.logger.info(f"Test: T={result.statistic:.4f}, df={result.df}, p={result.p_value:.4g}")
    session.write(dict(result.to_dict(), k=k), "test.json")


def sbmts_power(session, args):
    """Estimate rejection rates over the configured parameter grid.

    Parameters
    ----------
    session : sbmts.session.Session
        The run session.
    args : argparse.Namespace
        Unused beyond the global flags.
    """
    rows = session.manager.run_power()
    for row in rows:
        session.logger.info(f"Power: {row.method} [{row.param}] {row.power:.3f} +/- {row.se:.3f}")
    session.write(rows, "power.csv", **session.manager.diagnostics())


def sbmts_roc(session, args):
    """Mean ROC curve of every configured method.

    Parameters
    ----------
    session : sbmts.session.Session
        The run session.
    args : argparse.Namespace
        Unused beyond the global flags.
    """
    curves = session.manager.run_roc()
    for name, curve in curves.items():
        session.logger.info(f"ROC: {name} AUC {curve.auc:.3f}")
    diagnostics = session.manager.diagnostics()
    for name, curve in curves.items():
        session.write(curve, "roc.csv" if len(curves) == 1 else f"roc_{name}.csv", **diagnostics)


def sbmts_select_k(session, args):
    """Choose the number of communities for a sample.

    Parameters
    ----------
    session : sbmts.session.Session
        The run session.
    args : argparse.Namespace
        ``sample`` path.
    """
    from ..core.io import load_sample

    sample = load_sample(args.sample)
    k, aucs = session.manager.select_k(sample)
    session.write({"k": k, "aucs": aucs, "settings": session.config.select_k}, "select_k.json")


# Argument parsing


class ArgumentParser(argparse.ArgumentParser):
    """Parser whose usage errors raise ``ConfigError`` (exit code 1)."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _k_arg(value):
    if value == "auto":
        return value
    try:
        k = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"k must be a positive integer or 'auto', got {value!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError(f"k must be positive, got {k}")
    return k


def _positive_int(value):
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}") from None
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {number}")
    return number


def build_parser():
    """Build the ``sbmts`` argument parser.

    Returns
    -------
    ArgumentParser
    """
    from .. import __version__

    parser = ArgumentParser(prog="sbmts", description="Two-sample tests for samples of unlabeled networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="experiment config JSON")
    parser.add_argument("--seed", type=int, help="root random seed (overrides the config)")
    parser.add_argument("--threads", type=_positive_int, help="worker threads (default: one per core)")
    parser.add_argument("--out", default=".", help="output directory, or '-' for standard output")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")

    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)
    register_commands(subparsers)
    return parser


def configure_logging(args):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None):
    """Command-line entry point.

    Returns
    -------
    int
        0 on success, 1 on usage or config errors, 2 on data errors, 3 on
        numerical failures.
    """
    from ..core.config import ExperimentConfig
    from ..session import Session

    try:
        args = build_parser().parse_args(argv)
    except SbmtsError as e:
        logger.error(str(e))
        return e.exit_code
    configure_logging(args)

    try:
        config = ExperimentConfig(args.config)
        overrides = {key: getattr(args, key) for key in ("replicates", "methods") if getattr(args, key, None)}
        if getattr(args, "allow_overlap", False):
            overrides["allow_overlap"] = True
        config.from_dict(overrides)
        with Session(args.seed, args.threads, args.out, config, logger) as session:
            args.handler(session, args)
    except SbmtsError as e:
        logger.error(str(e))
        return e.exit_code
    return 0


# Command registration


def register_commands(subparsers):
    """Register all ``sbmts`` subcommands.

    Parameters
    ----------
    subparsers : argparse._SubParsersAction
        The subcommand collection of the top-level parser.
    """
    from ..core.config import METHODS

    # sbmts gen [--hypothesis null|alternative]
    gen = subparsers.add_parser("gen", help="generate a sample pair from the configured model")
    gen.add_argument("--hypothesis", choices=("null", "alternative"), help="law of the second sample")
    gen.set_defaults(handler=sbmts_gen)

    # sbmts fit <sample> [-k K]
    fit = subparsers.add_parser("fit", help="fit an SBM to every network of a sample")
    fit.add_argument("sample", help="directory, edge-list file or manifest")
    fit.add_argument("-k", type=_positive_int, help="number of communities (default: the config)")
    fit.set_defaults(handler=sbmts_fit)

    # sbmts match <b1> <b2> [--method spectral|lowrank|bruteforce]
    match = subparsers.add_parser("match", help="match two connectivity matrices")
    match.add_argument("b1", help="JSON matrix, bare or as {'B': ...}")
    match.add_argument("b2", help="JSON matrix, bare or as {'B': ...}")
    match.add_argument("--method", choices=("spectral", "lowrank", "bruteforce"), default="spectral")
    match.set_defaults(handler=sbmts_match)

    # sbmts test <sample1> <sample2> [-k K|auto]
    test = subparsers.add_parser("test", help="two-sample test on two samples of networks")
    test.add_argument("sample1", help="directory, edge-list file or manifest")
    test.add_argument("sample2", help="directory, edge-list file or manifest")
    test.add_argument("-k", type=_k_arg, help="number of communities or 'auto' (default: the config)")
    test.set_defaults(handler=sbmts_test)

    # sbmts power [--replicates R] [--methods ...]
    power = subparsers.add_parser("power", help="Monte Carlo rejection rates over the config grid")
    power.add_argument("--replicates", type=_positive_int, help="replicates per grid point")
    power.add_argument("--methods", nargs="+", choices=METHODS, help="methods to evaluate")
    power.add_argument("--allow-overlap", action="store_true", help="let null subsets of one class overlap")
    power.set_defaults(handler=sbmts_power)

    # sbmts roc [--replicates R] [--methods ...]
    roc = subparsers.add_parser("roc", help="mean ROC curves and AUC of every method")
    roc.add_argument("--replicates", type=_positive_int, help="replicates per outer draw")
    roc.add_argument("--methods", nargs="+", choices=METHODS, help="methods to evaluate")
    roc.add_argument("--allow-overlap", action="store_true", help="let null subsets of one class overlap")
    roc.set_defaults(handler=sbmts_roc)

    # sbmts select-k <sample>
    select = subparsers.add_parser("select-k", help="choose the number of communities by bootstrap")
    select.add_argument("sample", help="directory, edge-list file or manifest")
    select.set_defaults(handler=sbmts_select_k)
