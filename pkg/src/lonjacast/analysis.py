"""Cross-market correlation analysis and unit-root testing of the panel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MarketId
from .ingest import PricePanel

__all__ = [
    "CorrelationMatrix",
    "AdfResult",
    "pearson_matrix",
    "select_markets",
    "adf_test",
    "adf_critical_values",
]


@dataclass(frozen=True)
class CorrelationMatrix:
    markets: tuple[MarketId, ...]
    r: np.ndarray  # symmetric, diagonal 1

    def __post_init__(self) -> None:
        r = np.asarray(self.r, dtype=float)
        n = len(self.markets)
        if r.shape != (n, n):
            raise ValueError("correlation matrix shape must match market count")
        object.__setattr__(self, "r", r)
        r.setflags(write=False)

    def value(self, a: MarketId, b: MarketId) -> float:
        return float(self.r[self.markets.index(a), self.markets.index(b)])

    def to_csv(self) -> str:
        lines = ["market," + ",".join(m.id for m in self.markets)]
        for i, m in enumerate(self.markets):
            lines.append(m.id + "," + ",".join(f"{v:.6f}" for v in self.r[i]))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    lags_used: int
    reject_at: frozenset[str]  # subset of {"1%", "5%", "10%"}
    critical_values: dict[str, float]

    def __post_init__(self) -> None:
        # rejection is downward-closed: rejecting at 1% implies 5% and 10%
        if "1%" in self.reject_at and not {"5%", "10%"} <= self.reject_at:
            raise ValueError("inconsistent rejection set")
        if "5%" in self.reject_at and "10%" not in self.reject_at:
            raise ValueError("inconsistent rejection set")


def pearson_matrix(panel: PricePanel) -> CorrelationMatrix:
    """Sample Pearson correlation between every pair of panel columns."""
    x = panel.values
    if x.shape[0] < 3:
        raise ValueError("panel needs at least 3 rows for correlation")
    stds = x.std(axis=0)
    for j, s in enumerate(stds):
        if s == 0.0:
            raise ValueError(f"constant column for market {panel.markets[j].id}")
    r = np.corrcoef(x, rowvar=False)
    r = np.clip((r + r.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return CorrelationMatrix(markets=panel.markets, r=r)


def select_markets(
    m: CorrelationMatrix, target: MarketId, threshold: float = 0.98
) -> list[MarketId]:
    """Target plus every market correlated with it above ``threshold``,
    ordered by descending correlation, target first."""
    if target not in m.markets:
        raise KeyError(f"target {target.id} not in correlation matrix")
    ti = m.markets.index(target)
    others = [
        (float(m.r[ti, j]), mk)
        for j, mk in enumerate(m.markets)
        if j != ti and float(m.r[ti, j]) > threshold
    ]
    others.sort(key=lambda t: (-t[0], t[1].id))
    return [target] + [mk for _, mk in others]


# MacKinnon response-surface coefficients for the constant-only Dickey-Fuller
# t distribution: cv(n) = b0 + b1/n + b2/n^2 + b3/n^3.
_ADF_CONST_CV = {
    "1%": (-3.43035, -6.5393, -16.786, -79.433),
    "5%": (-2.86154, -2.8903, -4.234, -40.040),
    "10%": (-2.56677, -1.5384, -2.809, 0.0),
}


def adf_critical_values(nobs: int) -> dict[str, float]:
    """Finite-sample critical values for the constant-only ADF statistic."""
    return {
        level: b0 + b1 / nobs + b2 / nobs**2 + b3 / nobs**3
        for level, (b0, b1, b2, b3) in _ADF_CONST_CV.items()
    }


def _adf_regression(y: np.ndarray, lag: int, nobs: int) -> tuple[float, float, int]:
    """Fit dy_t = c + g*y_{t-1} + sum phi_i dy_{t-i}; return (t_gamma, aic, df).

    ``nobs`` fixes the estimation sample (last nobs rows) so AIC values are
    comparable across lag orders.
    """
    dy = np.diff(y)
    t = len(dy)
    rows = np.arange(t - nobs, t)
    # dy[i] = y[i+1] - y[i], so the lagged level for dy[i] is y[i]
    X_cols = [np.ones(nobs), y[rows]]
    for i in range(1, lag + 1):
        X_cols.append(dy[rows - i])
    X = np.column_stack(X_cols)
    target = dy[rows]
    beta, _, _, _ = np.linalg.lstsq(X, target, rcond=None)
    resid = target - X @ beta
    ssr = float(resid @ resid)
    k = X.shape[1]
    sigma2 = ssr / (nobs - k)
    cov = sigma2 * np.linalg.inv(X.T @ X)
    t_gamma = float(beta[1] / np.sqrt(cov[1, 1]))
    aic = nobs * np.log(ssr / nobs) + 2 * k
    return t_gamma, float(aic), k


def adf_test(series, max_lag: int | None = None) -> AdfResult:
    """Augmented Dickey-Fuller test, constant-only regression.

    Lag order is chosen by AIC over 0..max_lag on a common sample; the default
    max_lag follows the floor(12*(n/100)^0.25) rule.
    """
    y = np.asarray(series, dtype=float)
    n = len(y)
    if n < 15:
        raise ValueError(f"series too short for ADF test (n={n})")
    if np.ptp(y) == 0.0:
        raise ValueError("constant series has zero variance; ADF undefined")
    if max_lag is None:
        max_lag = int(np.floor(12 * (n / 100.0) ** 0.25))
    max_lag = min(max_lag, n // 2 - 5)
    if n < max_lag + 10:
        raise ValueError(f"series too short for max_lag={max_lag}")

    nobs = n - 1 - max_lag  # common estimation sample across lag orders
    best: tuple[float, int] | None = None
    for lag in range(max_lag + 1):
        _, aic, _ = _adf_regression(y, lag, nobs)
        if best is None or aic < best[0]:
            best = (aic, lag)
    assert best is not None
    lag = best[1]
    # final statistic uses the full sample available at the chosen lag
    stat, _, _ = _adf_regression(y, lag, n - 1 - lag)
    cvs = adf_critical_values(n - 1 - lag)
    reject = frozenset(level for level, cv in cvs.items() if stat < cv)
    return AdfResult(statistic=stat, lags_used=lag, reject_at=reject, critical_values=cvs)
