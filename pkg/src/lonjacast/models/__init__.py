"""Model families: linear, single-series SARIMA, tree ensembles, recurrent nets."""

from . import linear, neural, sarima, trees  # noqa: F401
