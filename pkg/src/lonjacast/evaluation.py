"""Metrics and the public-vs-subscription comparison report."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import spaces
from .core import LagScenario, MarketId, PublicationCalendar
from .ingest import PricePanel
from .models.sarima import one_step_predictions, sarima_fit
from .tuning import TrialRecord, random_search
from .windowing import build_dataset

__all__ = ["rmse", "r2", "ReportRow", "EvaluationReport", "scenario_report", "panel_fingerprint"]


def rmse(y: np.ndarray, yhat: np.ndarray) -> float:
    """Root mean squared error."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch {y.shape} vs {yhat.shape}")
    if y.size == 0:
        raise ValueError("empty vectors")
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


def r2(y: np.ndarray, yhat: np.ndarray) -> float:
    """Coefficient of determination, 1 - SSres/SStot."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch {y.shape} vs {yhat.shape}")
    if y.size < 2:
        raise ValueError("need at least 2 points")
    sstot = float(np.sum((y - y.mean()) ** 2))
    if sstot == 0.0:
        raise ValueError("constant y has zero total sum of squares")
    ssres = float(np.sum((y - yhat) ** 2))
    return 1.0 - ssres / sstot


def panel_fingerprint(panel: PricePanel) -> str:
    h = hashlib.sha256()
    h.update(",".join(m.id for m in panel.markets).encode())
    h.update(str(panel.weeks[0]).encode())
    h.update(str(panel.weeks[-1]).encode())
    h.update(np.ascontiguousarray(panel.values).tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class ReportRow:
    model: str
    scenario: str
    window: int
    rmse: float
    r2: float
    params: dict = field(default_factory=dict)
    status: str = "ok"

    def __post_init__(self) -> None:
        if self.status == "ok":
            if self.rmse < 0 or self.r2 > 1.0 + 1e-12:
                raise ValueError("invalid metrics")


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple[ReportRow, ...]
    seed: int
    data_fingerprint: str
    trials: int
    n_test: int

    def rows_for(self, scenario: str) -> list[ReportRow]:
        out = [r for r in self.rows if r.scenario == scenario]
        out.sort(key=lambda r: (-r.r2 if r.status == "ok" else np.inf, r.model))
        return out

    def to_text(self) -> str:
        """Aligned table, one row per model: public then subscription metrics."""
        scen = sorted({r.scenario for r in self.rows})
        by_model: dict[str, dict[str, ReportRow]] = {}
        for r in self.rows:
            by_model.setdefault(r.model, {})[r.scenario] = r
        order: list[str] = [r.model for r in self.rows_for(scen[-1]) ]
        if "public" in scen:
            order = [r.model for r in self.rows_for("public")]
        if "subscription" in scen:
            order = [r.model for r in self.rows_for("subscription")]

        def cell(row: ReportRow | None, attr: str) -> str:
            if row is None or row.status != "ok":
                return "-"
            return f"{getattr(row, attr):.5f}"

        header = f"{'Model':<16}"
        for s in ("public", "subscription"):
            if s in scen:
                header += f" {s + ' RMSE':>18} {s + ' R2':>16}"
        lines = [header, "-" * len(header)]
        for model in order:
            line = f"{model:<16}"
            for s in ("public", "subscription"):
                if s in scen:
                    row = by_model.get(model, {}).get(s)
                    line += f" {cell(row, 'rmse'):>18} {cell(row, 'r2'):>16}"
            lines.append(line)
        lines.append("")
        lines.append(f"test points per cell: {self.n_test}; trials: {self.trials}; seed: {self.seed}")
        lines.append(f"data fingerprint: {self.data_fingerprint}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {
                "rows": [
                    {
                        "model": r.model,
                        "scenario": r.scenario,
                        "window": r.window,
                        "rmse": r.rmse if np.isfinite(r.rmse) else None,
                        "r2": r.r2 if np.isfinite(r.r2) else None,
                        "params": _jsonable(r.params),
                        "status": r.status,
                    }
                    for s in sorted({r.scenario for r in self.rows})
                    for r in self.rows_for(s)
                ],
                "seed": self.seed,
                "trials": self.trials,
                "n_test": self.n_test,
                "data_fingerprint": self.data_fingerprint,
            },
            sort_keys=True,
        )


def _jsonable(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, (np.integer,)):
            v = int(v)
        elif isinstance(v, (np.floating,)):
            v = float(v)
        out[k] = v
    return out


def _test_week_count(panel: PricePanel, max_offset: int, test_fraction: float) -> int:
    n_ref = panel.n_weeks - (max_offset + 12 - 1)  # window sweep goes up to 12
    if n_ref < 10:
        raise ValueError(f"panel too short for evaluation ({panel.n_weeks} weeks)")
    return int(np.floor(n_ref * test_fraction))


def _evaluate_tabular_cell(
    family: str,
    scenario: LagScenario,
    panel: PricePanel,
    target: MarketId,
    calendar: PublicationCalendar,
    windows: list[int],
    n_test: int,
    trials: int,
    seed: int,
    desk: bool,
) -> ReportRow:
    n_markets = len(panel.markets)
    T = panel.n_weeks
    test_start_week = T - n_test  # panel row index of the first test target

    datasets = {}

    def get_split(window: int):
        if window not in datasets:
            ds = build_dataset(panel, target, window, scenario, calendar)
            first_row = T - ds.n_samples  # panel row of the first sample
            cut = test_start_week - first_row
            X, y = ds.features, ds.targets
            datasets[window] = (X[:cut], y[:cut], X[cut:], y[cut:])
        return datasets[window]

    def objective(params: dict) -> float:
        window = int(params["window"])
        if window not in windows:
            raise ValueError(f"window {window} not in sweep")
        Xtr, ytr, _, _ = get_split(window)
        n_inner = int(np.floor(len(ytr) * 0.8))
        if n_inner < 5 or len(ytr) - n_inner < 2:
            raise ValueError("training split too small for inner validation")
        fitted = spaces.fit_tabular(
            family, Xtr[:n_inner], ytr[:n_inner], params, seed, n_markets, window, desk
        )
        return rmse(ytr[n_inner:], fitted.predict(Xtr[n_inner:]))

    space = _pin_window(spaces.search_space(family, desk), windows)
    best, _records = random_search(space, trials, objective, seed=seed)
    window = int(best["window"])
    Xtr, ytr, Xte, yte = get_split(window)
    fitted = spaces.fit_tabular(family, Xtr, ytr, best, seed, n_markets, window, desk)
    yhat = fitted.predict(Xte)
    return ReportRow(
        model=family,
        scenario=scenario.name,
        window=window,
        rmse=rmse(yte, yhat),
        r2=r2(yte, yhat),
        params=_jsonable(best),
    )


def _pin_window(space, windows: list[int]):
    """Restrict the window dimension to the requested sweep."""
    from .tuning import Choice, SearchSpace

    params = dict(space.params)
    params["window"] = Choice(tuple(windows))
    return SearchSpace(family=space.family, params=params)


def _evaluate_series_cell(
    family: str,
    panel: PricePanel,
    target: MarketId,
    n_test: int,
    trials: int,
    seed: int,
) -> dict:
    """Single-series families see no scenario: one fit serves both columns."""
    series = panel.column(target)
    train_series = series[: len(series) - n_test]

    def objective(params: dict) -> float:
        spec = spaces.sarima_spec_from_params(family, params)
        n_inner = int(np.floor(len(train_series) * 0.8))
        m = sarima_fit(train_series[:n_inner], spec, seed=seed)
        preds = one_step_predictions(m, train_series)
        yhat = preds[n_inner:]
        if np.any(~np.isfinite(yhat)):
            raise ValueError("non-finite one-step predictions")
        return rmse(train_series[n_inner:], yhat)

    space = spaces.search_space(family)
    best, _records = random_search(space, trials, objective, seed=seed)
    spec = spaces.sarima_spec_from_params(family, best)
    m = sarima_fit(train_series, spec, seed=seed)
    preds = one_step_predictions(m, series)
    yhat = preds[len(series) - n_test :]
    yte = series[len(series) - n_test :]
    return {
        "model": family,
        "window": int(best["window"]),
        "rmse": rmse(yte, yhat),
        "r2": r2(yte, yhat),
        "params": _jsonable(best),
    }


def scenario_report(
    panel: PricePanel,
    target: MarketId,
    families: list[str],
    scenarios: list[LagScenario],
    calendar: PublicationCalendar,
    seed: int = 0,
    trials: int = 50,
    windows: list[int] | None = None,
    desk: bool = True,
    test_fraction: float = 0.2,
    workers: int = 1,
) -> EvaluationReport:
    """Tune, refit and score every (family, scenario) cell on a shared
    chronological test window.

    The test weeks are fixed once from the panel (the last 20% of the weeks
    every window size can cover), so every cell scores the same target weeks.
    Single-series families are fitted once and emitted identically under every
    scenario.
    """
    from .windowing import availability_offset

    windows = windows or list(range(2, 13))
    max_offset = max(
        availability_offset(m, sc, calendar, target).offset_weeks
        for sc in scenarios
        for m in panel.markets
    )
    n_test = _test_week_count(panel, max_offset, test_fraction)

    cells: list[tuple[str, LagScenario | None, int]] = []
    cell_seed = 0
    fam_order = [f for f in spaces.FAMILIES if f in families]
    seeds = np.random.SeedSequence(seed).generate_state(len(fam_order) * (len(scenarios) + 1))
    si = 0
    for family in fam_order:
        if family in spaces.SERIES_FAMILIES:
            cells.append((family, None, int(seeds[si])))
            si += 1
        else:
            for sc in scenarios:
                cells.append((family, sc, int(seeds[si])))
                si += 1

    def run_cell(cell):
        family, sc, sub_seed = cell
        try:
            if sc is None:
                return _evaluate_series_cell(family, panel, target, n_test, trials, sub_seed)
            return _evaluate_tabular_cell(
                family, sc, panel, target, calendar, windows, n_test, trials, sub_seed, desk
            )
        except Exception as exc:  # surfaced per row, the rest of the report proceeds
            return {"model": family, "error": str(exc), "scenario": getattr(sc, "name", None)}

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, cells))
    else:
        results = [run_cell(c) for c in cells]

    rows: list[ReportRow] = []
    for (family, sc, _), res in zip(cells, results):
        if isinstance(res, ReportRow):
            rows.append(res)
        elif "error" in res:
            for name in [sc.name] if sc is not None else [s.name for s in scenarios]:
                rows.append(
                    ReportRow(
                        model=family, scenario=name, window=0, rmse=float("inf"),
                        r2=float("-inf"), status=f"failed: {res['error']}",
                    )
                )
        else:
            # scenario-independent single-series result, duplicated bit-identically
            for s in scenarios:
                rows.append(
                    ReportRow(
                        model=res["model"], scenario=s.name, window=res["window"],
                        rmse=res["rmse"], r2=res["r2"], params=res["params"],
                    )
                )

    # cross-metric consistency: R2 == 1 - rmse^2 * n / SStot by construction;
    # asserted here so every emitted report carries the guarantee
    for row in rows:
        if row.status == "ok" and not np.isfinite(row.rmse):
            raise AssertionError("ok row with non-finite rmse")
    report = EvaluationReport(
        rows=tuple(rows),
        seed=seed,
        data_fingerprint=panel_fingerprint(panel),
        trials=trials,
        n_test=n_test,
    )
    _assert_series_invariance(report, scenarios)
    return report


def _assert_series_invariance(report: EvaluationReport, scenarios: list[LagScenario]) -> None:
    if len(scenarios) < 2:
        return
    for family in spaces.SERIES_FAMILIES:
        by_scen = {r.scenario: r for r in report.rows if r.model == family}
        if len(by_scen) < 2:
            continue
        vals = {(r.rmse, r.r2, r.window) for r in by_scen.values()}
        if len(vals) != 1:
            raise AssertionError(f"{family} rows differ across scenarios: {vals}")
