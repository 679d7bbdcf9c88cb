"""Single-series AR/ARIMA/SARIMA models estimated by conditional sum of squares.

The seasonal structure is multiplicative: phi(B) PHI(B^M) (1-B)^d (1-B^M)^D y_t
= c + theta(B) THETA(B^M) eps_t.  Pure-AR specifications are solved exactly by
least squares on lagged values; anything with MA terms goes through a seeded
derivative-free simplex search over the CSS objective.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.signal

__all__ = [
    "SarimaSpec",
    "SarimaModel",
    "sarima_fit",
    "sarima_forecast",
    "one_step_predictions",
    "css_objective",
]

_INF = float("inf")


@dataclass(frozen=True)
class SarimaSpec:
    p: int = 0
    d: int = 0
    q: int = 0
    P: int = 0
    D: int = 0
    Q: int = 0
    M: int = 1

    def __post_init__(self) -> None:
        for name in ("p", "d", "q", "P", "D", "Q"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.M < 1:
            raise ValueError("seasonal period M must be >= 1")
        if self.M == 1 and (self.P or self.D or self.Q):
            raise ValueError("seasonal orders require M > 1")
        if self.d + self.D > 3:
            raise ValueError("d + D > 3 risks over-differencing")

    @property
    def n_params(self) -> int:
        # constant + ar + ma + seasonal ar + seasonal ma
        return 1 + self.p + self.q + self.P + self.Q

    def param_names(self) -> list[str]:
        names = ["const"]
        names += [f"ar{i}" for i in range(1, self.p + 1)]
        names += [f"ma{i}" for i in range(1, self.q + 1)]
        names += [f"sar{i}" for i in range(1, self.P + 1)]
        names += [f"sma{i}" for i in range(1, self.Q + 1)]
        return names


def _split_params(spec: SarimaSpec, params: np.ndarray):
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.n_params,):
        raise ValueError(f"expected {spec.n_params} params, got {params.shape}")
    i = 1
    c = float(params[0])
    ar = params[i : i + spec.p]
    i += spec.p
    ma = params[i : i + spec.q]
    i += spec.q
    sar = params[i : i + spec.P]
    i += spec.P
    sma = params[i : i + spec.Q]
    return c, ar, ma, sar, sma


def _seasonal_poly(coefs: np.ndarray, M: int, sign: float) -> np.ndarray:
    """1 + sign*c1*B^M + sign*c2*B^2M + ... as a dense coefficient vector."""
    out = np.zeros(len(coefs) * M + 1)
    out[0] = 1.0
    for i, c in enumerate(coefs, start=1):
        out[i * M] = sign * c
    return out


def _full_polys(spec: SarimaSpec, params: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Expanded AR and MA lag polynomials (a_0 = m_0 = 1)."""
    c, ar, ma, sar, sma = _split_params(spec, params)
    ar_poly = np.concatenate(([1.0], -np.asarray(ar)))
    ma_poly = np.concatenate(([1.0], np.asarray(ma)))
    a_full = np.polymul(ar_poly, _seasonal_poly(np.asarray(sar), spec.M, -1.0))
    m_full = np.polymul(ma_poly, _seasonal_poly(np.asarray(sma), spec.M, 1.0))
    return c, a_full, m_full


def difference(y: np.ndarray, d: int, D: int, M: int) -> np.ndarray:
    w = np.asarray(y, dtype=float)
    for _ in range(d):
        w = np.diff(w)
    for _ in range(D):
        w = w[M:] - w[:-M]
    return w


def _diff_poly(spec: SarimaSpec) -> np.ndarray:
    poly = np.array([1.0])
    for _ in range(spec.d):
        poly = np.polymul(poly, [1.0, -1.0])
    season = np.zeros(spec.M + 1)
    season[0], season[-1] = 1.0, -1.0
    for _ in range(spec.D):
        poly = np.polymul(poly, season)
    return poly  # w_t = sum_k poly[k] * y_{t-k}


def _residuals(spec: SarimaSpec, params: np.ndarray, w: np.ndarray) -> np.ndarray | None:
    """Conditional one-step residuals over w indexes >= the AR polynomial span.

    Pre-sample residuals are zero; returns None when the recursion explodes.
    """
    c, a_full, m_full = _full_polys(spec, params)
    if not np.all(np.isfinite(params)):
        return None
    L_ar = len(a_full) - 1
    n = len(w)
    if n - L_ar < 1:
        return None
    # rhs_t = sum_i a_i w_{t-i} - c for t in [L_ar, n)
    rhs = np.convolve(w, a_full, mode="full")[L_ar : n] - c
    with np.errstate(over="ignore", invalid="ignore"):
        eps = scipy.signal.lfilter([1.0], m_full, rhs)
    if not np.all(np.isfinite(eps)) or np.max(np.abs(eps)) > 1e100:
        return None
    return eps


def css_objective(series: np.ndarray, spec: SarimaSpec, params: np.ndarray) -> float:
    """Sum of squared conditional one-step residuals; +inf for explosive params."""
    w = difference(series, spec.d, spec.D, spec.M)
    eps = _residuals(spec, np.asarray(params, dtype=float), w)
    if eps is None:
        return _INF
    val = float(eps @ eps)
    return val if np.isfinite(val) else _INF


@dataclass(frozen=True)
class SarimaModel:
    spec: SarimaSpec
    ar: np.ndarray
    ma: np.ndarray
    seasonal_ar: np.ndarray
    seasonal_ma: np.ndarray
    constant: float
    residuals: np.ndarray
    training_tail: np.ndarray  # original-scale tail, long enough to restart recursions
    css: float
    seed: int = 0

    @property
    def params(self) -> np.ndarray:
        return np.concatenate(
            ([self.constant], self.ar, self.ma, self.seasonal_ar, self.seasonal_ma)
        )

    def to_json(self, fingerprint: str = "") -> str:
        s = self.spec
        return json.dumps(
            {
                "family": "sarima",
                "hyperparams": {
                    "p": s.p, "d": s.d, "q": s.q,
                    "P": s.P, "D": s.D, "Q": s.Q, "M": s.M,
                },
                "params": {
                    name: float(v) for name, v in zip(s.param_names(), self.params)
                },
                "seed": self.seed,
                "trained_on": fingerprint,
            },
            sort_keys=True,
        )


def _tail_length(spec: SarimaSpec) -> int:
    diff_span = spec.d + spec.D * spec.M
    ar_span = spec.p + spec.P * spec.M
    ma_span = spec.q + spec.Q * spec.M
    return diff_span + max(ar_span, ma_span, 1)


def _exact_ar_fit(w: np.ndarray, p: int) -> np.ndarray:
    """OLS of w_t on a constant and its first p lags; returns [c, phi...]."""
    n = len(w)
    X = np.column_stack([np.ones(n - p)] + [w[p - i : n - i] for i in range(1, p + 1)])
    beta, _, _, _ = np.linalg.lstsq(X, w[p:], rcond=None)
    return beta


def sarima_fit(series: np.ndarray, spec: SarimaSpec, seed: int = 0) -> SarimaModel:
    """Fit by CSS.  Exact least squares when the spec is pure nonseasonal AR;
    otherwise a seeded Nelder-Mead search with 5 perturbed restarts."""
    y = np.asarray(series, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("series must be finite")
    w = difference(y, spec.d, spec.D, spec.M)
    min_len = 10 * (spec.p + spec.q + spec.P + spec.Q + 1)
    if len(w) < min_len:
        raise ValueError(f"need >= {min_len} observations after differencing, have {len(w)}")

    pure_ar = spec.q == 0 and spec.Q == 0 and spec.P == 0
    if pure_ar:
        beta = _exact_ar_fit(w, spec.p)
        params = np.concatenate((beta, np.zeros(0)))
    else:
        params = _simplex_fit(w, spec, seed)

    eps = _residuals(spec, params, w)
    if eps is None:
        raise RuntimeError(f"non-finite CSS objective at fitted point {params}")
    c, ar, ma, sar, sma = _split_params(spec, params)
    return SarimaModel(
        spec=spec,
        ar=np.array(ar),
        ma=np.array(ma),
        seasonal_ar=np.array(sar),
        seasonal_ma=np.array(sma),
        constant=c,
        residuals=eps,
        training_tail=y[-_tail_length(spec):].copy(),
        css=float(eps @ eps),
        seed=seed,
    )


def _simplex_fit(w: np.ndarray, spec: SarimaSpec, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)

    def objective(params: np.ndarray) -> float:
        eps = _residuals(spec, params, w)
        if eps is None:
            return 1e30  # finite sentinel keeps the simplex moving
        val = float(eps @ eps)
        return val if np.isfinite(val) else 1e30

    # AR-flavoured initial point: OLS on nonseasonal and seasonal lags, MA = 0.
    x0 = np.zeros(spec.n_params)
    x0[0] = float(np.mean(w))
    if spec.p > 0:
        try:
            beta = _exact_ar_fit(w, spec.p)
            x0[0] = beta[0]
            x0[1 : 1 + spec.p] = np.clip(beta[1:], -0.95, 0.95)
        except np.linalg.LinAlgError:
            pass

    best_params: np.ndarray | None = None
    best_obj = _INF
    for restart in range(5):
        start = x0 if restart == 0 else x0 + rng.normal(0.0, 0.1, size=len(x0))
        res = scipy.optimize.minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={"maxiter": 400 * spec.n_params, "xatol": 1e-7, "fatol": 1e-10},
        )
        if res.fun < best_obj:
            best_obj = float(res.fun)
            best_params = np.asarray(res.x, dtype=float)
    if best_params is None or best_obj >= 1e30:
        raise RuntimeError("CSS search found no finite objective point")
    return best_params


def sarima_forecast(m: SarimaModel, steps: int) -> np.ndarray:
    """Iterated one-step forecasts with future residuals set to zero,
    integrated back through the d and D differences."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    spec = m.spec
    c, a_full, m_full = _full_polys(spec, m.params)
    L_ar, L_ma = len(a_full) - 1, len(m_full) - 1
    dpoly = _diff_poly(spec)
    diff_span = len(dpoly) - 1

    y_ext = list(np.asarray(m.training_tail, dtype=float))
    w_hist = list(difference(np.asarray(m.training_tail, dtype=float), spec.d, spec.D, spec.M))
    eps_hist = list(m.residuals[-L_ma:]) if L_ma > 0 else []

    out = []
    for _ in range(steps):
        w_next = c
        for i in range(1, L_ar + 1):
            if i <= len(w_hist):
                w_next -= a_full[i] * w_hist[-i]
        for j in range(1, L_ma + 1):
            if j <= len(eps_hist):
                w_next += m_full[j] * eps_hist[-j]
        # invert the differencing: w_t = sum_k dpoly[k] y_{t-k}
        y_next = w_next
        for k in range(1, diff_span + 1):
            y_next -= dpoly[k] * y_ext[-k]
        out.append(y_next)
        y_ext.append(y_next)
        w_hist.append(w_next)
        if L_ma > 0:
            eps_hist.append(0.0)
    return np.array(out)


def one_step_predictions(m: SarimaModel, series: np.ndarray) -> np.ndarray:
    """In-sample/rolling one-step-ahead predictions for a full series under the
    fitted parameters: yhat_t = y_t - eps_t on the original scale.

    Entries before the conditioning span are NaN.
    """
    y = np.asarray(series, dtype=float)
    spec = m.spec
    w = difference(y, spec.d, spec.D, spec.M)
    eps = _residuals(spec, m.params, w)
    if eps is None:
        raise RuntimeError("explosive parameters on this series")
    _, a_full, _ = _full_polys(spec, m.params)
    L_ar = len(a_full) - 1
    diff_span = spec.d + spec.D * spec.M
    out = np.full(len(y), np.nan)
    # eps[j] corresponds to w index L_ar + j, i.e. y index diff_span + L_ar + j
    start = diff_span + L_ar
    out[start:] = y[start:] - eps
    return out
