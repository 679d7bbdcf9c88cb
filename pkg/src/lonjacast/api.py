"""HTTP JSON API consumed by the dashboard."""

from __future__ import annotations

import datetime as _dt
from decimal import Decimal

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .analysis import pearson_matrix
from .core import IsoWeek, MarketSeries
from .ingest import align_panel
from .service import ServiceConfig, compute_forecast, record_settlement, run_weekly_cycle
from .store import EventStore

__all__ = ["create_app"]


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})


def _series_payload(series: MarketSeries, frm: str | None, to: str | None) -> dict:
    lo = IsoWeek.parse(frm) if frm else None
    hi = IsoWeek.parse(to) if to else None
    rows = []
    for obs in series.observations:
        if lo is not None and obs.week < lo:
            continue
        if hi is not None and obs.week > hi:
            continue
        rows.append(
            {
                "week": str(obs.week),
                "price": float(obs.price),
                "weekday": obs.decision_weekday.name,
            }
        )
    return {"market": series.market.id, "observations": rows}


def create_app(config: ServiceConfig, store: EventStore) -> FastAPI:
    app = FastAPI(title="lonjacast", docs_url=None, redoc_url=None)

    @app.exception_handler(Exception)
    async def unhandled(request: Request, exc: Exception) -> JSONResponse:
        return _error(500, "internal", str(exc))

    @app.get("/api/health")
    def health() -> dict:
        snap = store.snapshot
        last = snap.last_cycle.get("at") if snap.last_cycle else None
        return {"status": "ok", "last_cycle": last, "events": snap.event_count}

    @app.get("/api/markets")
    def markets() -> dict:
        calendar = config.calendar_obj()
        snap = store.snapshot
        out = []
        for market in snap.markets():
            series = snap.series(market)
            latest = series.observations[-1] if series and len(series) else None
            weekday = None
            for mid, wd in calendar.weekdays.items():
                if mid.id == market:
                    weekday = wd.name
            out.append(
                {
                    "market": market,
                    "weekday": weekday,
                    "latest_week": str(latest.week) if latest else None,
                    "latest_price": float(latest.price) if latest else None,
                }
            )
        return {"markets": out, "target": config.target_market}

    @app.get("/api/series/{market}")
    def series(market: str, request: Request):
        snap = store.snapshot
        s = snap.series(market)
        if s is None:
            return _error(404, "unknown_market", f"no data for market {market}")
        try:
            return _series_payload(
                s, request.query_params.get("from"), request.query_params.get("to")
            )
        except ValueError as exc:
            return _error(400, "bad_week", str(exc))

    @app.get("/api/correlations")
    def correlations():
        snap = store.snapshot
        all_series = [snap.series(m) for m in snap.markets()]
        all_series = [s for s in all_series if s is not None and len(s) >= 3]
        if len(all_series) < 2:
            return _error(409, "insufficient_data", "need at least two series for correlations")
        try:
            panel, _ = align_panel(all_series)
            corr = pearson_matrix(panel)
        except ValueError as exc:
            return _error(409, "degenerate_panel", str(exc))
        return {
            "markets": [m.id for m in corr.markets],
            "r": [[float(v) for v in row] for row in corr.r],
        }

    @app.get("/api/forecast/latest")
    def forecast_latest():
        latest = store.snapshot.latest_forecast()
        if latest is None:
            return _error(404, "no_forecast", "no forecast recorded yet; run a cycle")
        return latest

    @app.get("/api/forecast/history")
    def forecast_history() -> dict:
        snap = store.snapshot
        active = {w: f for w, f in snap.forecasts.items()}
        pairs = []
        for week in sorted(active, key=IsoWeek.parse):
            settlement = snap.settlements.get(week)
            if settlement is None:
                continue
            predicted = float(active[week]["predicted_price"])
            agreed = float(Decimal(settlement["agreed_price"]))
            pairs.append(
                {
                    "week": week,
                    "predicted": predicted,
                    "agreed": agreed,
                    "abs_error": round(abs(predicted - agreed), 6),
                }
            )
        return {
            "forecasts": snap.forecast_history,
            "settlements": snap.settlement_history,
            "pairs": pairs,
            "max_abs_error": max((p["abs_error"] for p in pairs), default=None),
        }

    @app.post("/api/settlement")
    async def settlement(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_json", "request body must be JSON")
        missing = {"week", "agreed_price", "entered_by"} - set(body)
        if missing:
            return _error(400, "missing_fields", f"missing fields: {sorted(missing)}")
        try:
            payload = record_settlement(
                config, store, str(body["week"]), float(body["agreed_price"]), str(body["entered_by"])
            )
        except (ValueError, ArithmeticError) as exc:
            return _error(422, "invalid_settlement", str(exc))
        return {"recorded": payload}

    @app.post("/api/cycle")
    def cycle() -> dict:
        return {"summary": run_weekly_cycle(config, store)}

    @app.get("/api/report")
    def report():
        snap = store.snapshot
        if snap.last_report is None:
            return _error(404, "no_report", "no evaluation report recorded yet")
        return snap.last_report

    @app.post("/api/whatif")
    async def whatif(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_json", "request body must be JSON")
        overrides = body.get("overrides", [])
        if not isinstance(overrides, list):
            return _error(400, "bad_overrides", "overrides must be a list")
        for ov in overrides:
            if not isinstance(ov, dict) or {"market", "week", "price"} - set(ov):
                return _error(400, "bad_overrides", "each override needs market, week, price")
        try:
            baseline = compute_forecast(config, store)
            adjusted = compute_forecast(config, store, overrides=overrides)
        except KeyError as exc:
            return _error(422, "unknown_market", str(exc))
        except (ValueError, RuntimeError) as exc:
            return _error(422, "invalid_whatif", str(exc))
        return {"baseline": baseline, "whatif": adjusted}

    return app


def timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()
