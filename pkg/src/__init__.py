# vim: set expandtab shiftwidth=4 softtabstop=4:

"""Two-sample hypothesis tests for samples of unlabeled networks under stochastic block models."""

__version__ = "0.1.0"  # x-release-please-version
