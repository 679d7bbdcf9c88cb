"""Per-family hyperparameter spaces and fit/predict adapters.

Two scales exist: the full spaces contain the published best hyperparameters
as interior points; the desk spaces shrink iteration-heavy knobs so a whole
multi-family evaluation finishes in minutes on a laptop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .models import linear, neural, trees
from .models.sarima import SarimaSpec
from .tuning import Choice, IntUniform, LogUniform, SearchSpace, Uniform

__all__ = [
    "FAMILIES",
    "TABULAR_FAMILIES",
    "SERIES_FAMILIES",
    "search_space",
    "fit_tabular",
    "sarima_spec_from_params",
    "champion_defaults",
]

#: Families appearing in an evaluation report, in canonical order.
SERIES_FAMILIES = ("arima", "sarima")
TABULAR_FAMILIES = (
    "ridge",
    "svr",
    "random_forest",
    "extra_trees",
    "gbdt",
    "rnn",
    "lstm",
)
FAMILIES = ("ridge",) + SERIES_FAMILIES + (
    "svr",
    "random_forest",
    "extra_trees",
    "gbdt",
    "rnn",
    "lstm",
)

_WINDOW = IntUniform(2, 12)


def search_space(family: str, desk: bool = True) -> SearchSpace:
    """Search space for one family.  ``desk=False`` gives the full-scale
    spaces whose ranges contain the published best values."""
    if family == "ridge":
        params = {"window": _WINDOW, "alpha": LogUniform(1e-4, 10.0)}
    elif family == "svr":
        params = {
            "window": _WINDOW,
            "C": LogUniform(1e-3, 10.0),
            "epsilon": LogUniform(1e-4, 0.1),
        }
    elif family == "arima":
        params = {"window": _WINDOW, "p": IntUniform(1, 6), "d": IntUniform(0, 1), "q": IntUniform(0, 2)}
    elif family == "sarima":
        params = {
            "window": _WINDOW,
            "p": IntUniform(0, 2),
            "d": IntUniform(0, 1),
            "q": IntUniform(0, 3),
            "P": IntUniform(0, 1),
            "D": IntUniform(0, 1),
            "Q": IntUniform(0, 2),
            "M": Choice((12,)),
        }
    elif family == "random_forest":
        params = {
            "window": _WINDOW,
            "n_estimators": IntUniform(10, 40) if desk else IntUniform(50, 300),
            "min_samples_leaf": LogUniform(1e-3, 0.1),
            "min_samples_split": IntUniform(2, 10),
            "max_features": Choice(("all",)),
        }
    elif family == "extra_trees":
        params = {
            "window": _WINDOW,
            "n_estimators": IntUniform(10, 40) if desk else IntUniform(50, 300),
            "max_depth": IntUniform(10, 300),
            "min_samples_leaf": LogUniform(1e-3, 0.1),
            "min_samples_split": IntUniform(2, 10),
            "max_features": Choice(("all",)),
        }
    elif family == "gbdt":
        params = {
            "window": _WINDOW,
            "learning_rate": LogUniform(0.01, 0.5),
            "max_depth": IntUniform(2, 8),
            "n_estimators": IntUniform(10, 40) if desk else IntUniform(50, 300),
            "min_child_samples": IntUniform(1, 10),
        }
    elif family in ("rnn", "lstm"):
        params = {
            "window": _WINDOW,
            "dropout": Uniform(0.0, 0.1),
            "learning_rate": LogUniform(1e-4, 1e-2),
        }
    else:
        raise ValueError(f"unknown family {family!r}")
    return SearchSpace(family=family, params=params)


def _net_spec(family: str, params: dict, seed: int, desk: bool) -> neural.NetSpec:
    if family == "rnn":
        sizes = (16, 8, 1) if desk else (1024, 256, 1)
    else:
        sizes = (16, 8, 1) if desk else (200, 100, 50, 1)
    return neural.NetSpec(
        kind=family,
        layer_sizes=sizes,
        dropout=float(params.get("dropout", 0.02)),
        epochs=10 if desk else 500,
        batch_size=32 if desk else 10,
        learning_rate=float(params.get("learning_rate", 1e-3)),
        seed=seed,
    )


def sarima_spec_from_params(family: str, params: dict) -> SarimaSpec:
    if family == "arima":
        return SarimaSpec(p=int(params["p"]), d=int(params["d"]), q=int(params["q"]))
    return SarimaSpec(
        p=int(params["p"]),
        d=int(params["d"]),
        q=int(params["q"]),
        P=int(params["P"]),
        D=int(params["D"]),
        Q=int(params["Q"]),
        M=int(params["M"]) if (params["P"] or params["D"] or params["Q"]) else 1,
    )


@dataclass(frozen=True)
class FittedTabular:
    predict: Callable[[np.ndarray], np.ndarray]


def fit_tabular(
    family: str,
    X: np.ndarray,
    y: np.ndarray,
    params: dict,
    seed: int,
    n_markets: int,
    window: int,
    desk: bool = True,
) -> FittedTabular:
    """Fit one feature-matrix family and return a prediction closure."""
    if family == "ridge":
        m = linear.ridge_fit(X, y, alpha=float(params["alpha"]))
        return FittedTabular(lambda Xn: linear.linear_predict(m, Xn))
    if family == "svr":
        m = linear.svr_fit(
            X, y, C=float(params["C"]), epsilon=float(params["epsilon"]), seed=seed
        )
        return FittedTabular(lambda Xn: linear.linear_predict(m, Xn))
    if family in ("random_forest", "extra_trees"):
        tp = trees.TreeParams(
            max_depth=int(params["max_depth"]) if "max_depth" in params else None,
            min_samples_split=int(params["min_samples_split"]),
            min_samples_leaf=float(params["min_samples_leaf"]),
            max_features=params["max_features"],
        )
        m = trees.forest_fit(
            X, y, family=family, n_estimators=int(params["n_estimators"]), params=tp, seed=seed
        )
        return FittedTabular(lambda Xn: trees.ensemble_predict(m, Xn))
    if family == "gbdt":
        m = trees.gbdt_fit(
            X,
            y,
            learning_rate=float(params["learning_rate"]),
            max_depth=int(params["max_depth"]),
            n_estimators=int(params["n_estimators"]),
            seed=seed,
            min_samples_leaf=int(params["min_child_samples"]),
        )
        return FittedTabular(lambda Xn: trees.ensemble_predict(m, Xn))
    if family in ("rnn", "lstm"):
        spec = _net_spec(family, params, seed, desk)
        nm = neural.net_fit(
            _to_sequences(X, n_markets, window), y, spec, n_inputs=n_markets, time_steps=window
        )
        return FittedTabular(lambda Xn: neural.net_predict(nm, _to_sequences(Xn, n_markets, window)))
    raise ValueError(f"unknown tabular family {family!r}")


def _to_sequences(X: np.ndarray, n_markets: int, window: int) -> np.ndarray:
    """Market-major flat features -> (n, window, markets), oldest step first."""
    X = np.asarray(X, dtype=float)
    seq = X.reshape(len(X), n_markets, window).transpose(0, 2, 1)
    return seq[:, ::-1, :]


#: Published best hyperparameters for the production champion (Ridge, window 2).
def champion_defaults() -> dict:
    return {"family": "ridge", "window": 2, "alpha": 0.010034555}
