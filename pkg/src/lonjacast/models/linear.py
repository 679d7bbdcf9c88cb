"""Linear model family: ridge regression and primal linear epsilon-SVR."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = ["LinearModel", "ridge_fit", "svr_fit", "svr_objective", "linear_predict"]


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    intercept: float
    family: str  # "ridge" | "linear_svr"
    hyperparams: dict
    seed: int = 0
    converged: bool = True
    standardizer: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if not np.all(np.isfinite(w)) or not np.isfinite(self.intercept):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "weights", w)
        w.setflags(write=False)

    def to_json(self, feature_names: list[str] | None = None, fingerprint: str = "") -> str:
        return json.dumps(
            {
                "family": self.family,
                "hyperparams": self.hyperparams,
                "weights": [float(v) for v in self.weights],
                "intercept": float(self.intercept),
                "feature_names": feature_names or [],
                "seed": self.seed,
                "trained_on": fingerprint,
            },
            sort_keys=True,
        )


def ridge_fit(X: np.ndarray, y: np.ndarray, alpha: float) -> LinearModel:
    """Minimize ||y - Xw - b||^2 + alpha*||w||^2 with an unpenalized intercept.

    The intercept is absorbed by centering X and y; the centered normal
    equations (Xc'Xc + alpha*I) w = Xc'y are solved by Cholesky factorization.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError("X must be a non-empty 2-D matrix")
    if y.shape != (X.shape[0],):
        raise ValueError("y length must match X rows")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("inputs must be finite")

    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    A = Xc.T @ Xc + alpha * np.eye(X.shape[1])
    b = Xc.T @ yc
    try:
        c, low = scipy.linalg.cho_factor(A, lower=True)
        w = scipy.linalg.cho_solve((c, low), b)
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError(
            "singular normal equations: rank-deficient X with alpha = 0"
        ) from None
    intercept = float(y_mean - x_mean @ w)
    return LinearModel(weights=w, intercept=intercept, family="ridge", hyperparams={"alpha": alpha})


def svr_objective(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, C: float, epsilon: float
) -> float:
    """Primal epsilon-insensitive objective: 0.5*||w||^2 + C*sum hinge."""
    resid = np.abs(y - X @ w - b) - epsilon
    return 0.5 * float(w @ w) + C * float(np.sum(np.maximum(resid, 0.0)))


def svr_fit(
    X: np.ndarray,
    y: np.ndarray,
    C: float,
    epsilon: float,
    seed: int = 0,
    max_iters: int = 20000,
    standardize: bool = False,
) -> LinearModel:
    """Linear SVR by deterministic seeded subgradient descent.

    Tracks the best point seen (periodically also scoring the running average
    of iterates) and returns it; a non-convergence flag is raised on the model
    when the objective has not stabilized by the iteration budget.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if C <= 0 or epsilon < 0:
        raise ValueError("require C > 0 and epsilon >= 0")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("inputs must be finite")
    n, d = X.shape

    mean = np.zeros(d)
    scale = np.ones(d)
    if standardize:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0
        X = (X - mean) / scale

    rng = np.random.default_rng(seed)
    w = np.zeros(d)
    b = float(np.median(y))
    best_w, best_b = w.copy(), b
    best_obj = svr_objective(X, y, w, b, C, epsilon)
    avg_w, avg_b = w.copy(), b
    history: list[float] = [best_obj]

    batch = min(n, 64)
    for t in range(1, max_iters + 1):
        idx = rng.integers(0, n, size=batch)
        resid = y[idx] - X[idx] @ w - b
        sign = np.where(resid > epsilon, -1.0, np.where(resid < -epsilon, 1.0, 0.0))
        grad_w = w + (C * n / batch) * (X[idx].T @ sign)
        grad_b = (C * n / batch) * float(np.sum(sign))
        eta = 1.0 / (1.0 + 0.1 * t)
        w = w - eta * grad_w / n
        b = b - eta * grad_b / n
        avg_w += (w - avg_w) / t
        avg_b += (b - avg_b) / t
        if t % 200 == 0 or t == max_iters:
            for cw, cb in ((w, b), (avg_w, avg_b)):
                obj = svr_objective(X, y, cw, cb, C, epsilon)
                if obj < best_obj:
                    best_obj = obj
                    best_w, best_b = cw.copy(), float(cb)
            history.append(best_obj)

    converged = len(history) >= 3 and abs(history[-1] - history[-3]) <= 0.01 * max(
        abs(history[-1]), 1e-12
    )
    return LinearModel(
        weights=best_w,
        intercept=float(best_b),
        family="linear_svr",
        hyperparams={"C": C, "epsilon": epsilon},
        seed=seed,
        converged=converged,
        standardizer=(mean, scale) if standardize else None,
    )


def linear_predict(m: LinearModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != len(m.weights):
        raise ValueError(f"expected {len(m.weights)} features, got {X.shape[1]}")
    if m.standardizer is not None:
        mean, scale = m.standardizer
        X = (X - mean) / scale
    out = X @ m.weights + m.intercept
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite prediction")
    return out
