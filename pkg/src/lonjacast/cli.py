"""Batch command-line entry points for the full pipeline.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import figures
from .analysis import adf_test, pearson_matrix, select_markets
from .core import (
    DEFAULT_CALENDAR,
    MarketId,
    PublicDelayed,
    SubscriptionSameWeek,
)
from .evaluation import scenario_report
from .ingest import IngestError, align_panel, fetch_source, parse_price_csv, repair_outliers
from .models.linear import ridge_fit
from .service import ServiceConfig, compute_forecast, run_weekly_cycle
from .spaces import FAMILIES, champion_defaults
from .store import EventStore
from .windowing import build_dataset

USAGE_ERROR, DATA_ERROR, RUNTIME_ERROR = 1, 2, 3


class UsageError(ValueError):
    """Bad flags or flag combinations, as opposed to bad input data."""


def _bundled_sample() -> str:
    return resources.files("lonjacast.data").joinpath("sample_prices.csv").read_text("utf-8")


def _load_csv(data: str | None) -> str:
    if data is None:
        return _bundled_sample()
    p = Path(data)
    if p.is_dir():
        csvs = sorted(p.glob("*.csv"))
        if not csvs:
            raise IngestError(f"no .csv files in {p}")
        return "\n".join(
            text if i == 0 else "\n".join(text.splitlines()[1:])
            for i, text in enumerate(c.read_text("utf-8") for c in csvs)
        )
    return fetch_source(str(p))


def _panel_from_args(args) -> tuple:
    text = _load_csv(args.data)
    series = parse_price_csv(text)
    repaired = []
    total_repairs = 0
    for s in series:
        r, log = repair_outliers(s)
        repaired.append(r)
        total_repairs += len(log)
    panel, fills = align_panel(repaired)
    return panel, fills, total_repairs


def _scenarios(name: str):
    if name == "public":
        return [PublicDelayed(2)]
    if name == "subscription":
        return [SubscriptionSameWeek()]
    if name == "both":
        return [PublicDelayed(2), SubscriptionSameWeek()]
    raise ValueError(f"unknown scenario {name!r} (expected public|subscription|both)")


def _parse_models(spec: str) -> list[str]:
    if spec == "all":
        return list(FAMILIES)
    models = [m.strip() for m in spec.split(",") if m.strip()]
    bad = [m for m in models if m not in FAMILIES]
    if bad:
        raise ValueError(f"unknown models {bad}; known: {', '.join(FAMILIES)}")
    return models


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lonjacast",
        description="Weekly pork price forecasting: ingest, analyze, tune, evaluate, serve.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="service config JSON path")
    common.add_argument("--data", help="price CSV path or directory (default: bundled sample)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="directory for text/JSON/figure artifacts")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=argparse.ArgumentParser)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    add("ingest", help="parse, repair and align the input panel")

    p = add("analyze", help="correlation matrix, market selection and ADF tests")
    p.add_argument("--target", default="ES-LLEIDA")
    p.add_argument("--threshold", type=float, default=0.98)

    p = add("build-dataset", help="dump a leakage-safe supervised dataset as CSV")
    p.add_argument("--target", default="ES-LLEIDA")
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--scenario", default="public", choices=["public", "subscription"])

    p = add("tune", help="random hyperparameter search for one model family")
    p.add_argument("--models", default="ridge")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--scenario", default="subscription", choices=["public", "subscription"])
    p.add_argument("--target", default="ES-LLEIDA")

    p = add("train", help="fit the champion model and print its JSON")
    p.add_argument("--target", default="ES-LLEIDA")

    p = add("evaluate", help="public-vs-subscription comparison report")
    p.add_argument("--scenario", default="both")
    p.add_argument("--models", default="all")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--window", default="sweep", help="fixed window size or 'sweep' (2..12)")
    p.add_argument("--target", default="ES-LLEIDA")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument(
        "--full-scale",
        action="store_true",
        help="full-size search spaces and network architectures (slow)",
    )

    add("forecast", help="one champion forecast for the next decision week")

    add("serve", help="run the HTTP JSON API")

    p = add("cycle", help="run one weekly fetch->retrain->forecast cycle")
    return ap


def _cmd_ingest(args) -> int:
    panel, fills, repairs = _panel_from_args(args)
    print(
        f"panel: {panel.n_weeks} weeks x {len(panel.markets)} markets "
        f"({panel.weeks[0]}..{panel.weeks[-1]})"
    )
    print(f"repairs: {repairs}; gap fills: {len(fills)}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        gaps = "\n".join(
            json.dumps(
                {"market": g.market.id, "week": str(g.week), "filled_value": str(g.filled_value)},
                sort_keys=True,
            )
            for g in fills
        )
        (out / "gap_report.ndjson").write_text(gaps + ("\n" if gaps else ""), "utf-8")
        print(f"wrote {out / 'gap_report.ndjson'}")
    return 0


def _cmd_analyze(args) -> int:
    panel, _, _ = _panel_from_args(args)
    corr = pearson_matrix(panel)
    target = MarketId(args.target)
    selected = select_markets(corr, target, args.threshold)
    print(f"selected markets (r > {args.threshold} with {target.id}):")
    for m in selected:
        print(f"  {m.id}  r={corr.value(m, target):.5f}")
    print("ADF (constant-only):")
    for j, m in enumerate(panel.markets):
        res = adf_test(panel.values[:, j])
        levels = ",".join(sorted(res.reject_at)) or "none"
        print(f"  {m.id}: stat={res.statistic:.4f} lags={res.lags_used} reject@[{levels}]")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "correlations.csv").write_text(corr.to_csv(), "utf-8")
        figures.correlation_heatmap(corr, out / "correlations.png")
        figures.panel_chart(panel, out / "panel.png")
        print(f"wrote {out / 'correlations.csv'}, correlations.png, panel.png")
    return 0


def _cmd_build_dataset(args) -> int:
    panel, _, _ = _panel_from_args(args)
    scenario = _scenarios(args.scenario)[0]
    ds = build_dataset(panel, MarketId(args.target), args.window, scenario, DEFAULT_CALENDAR)
    text = ds.to_csv()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        name = f"dataset_{args.scenario}_w{args.window}.csv"
        (out / name).write_text(text, "utf-8")
        print(f"{ds.n_samples} samples x {len(ds.feature_names)} features -> {out / name}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_tune(args) -> int:
    panel, _, _ = _panel_from_args(args)
    models = _parse_models(args.models)
    scenarios = _scenarios(args.scenario)
    report = scenario_report(
        panel,
        MarketId(args.target),
        models,
        scenarios,
        DEFAULT_CALENDAR,
        seed=args.seed,
        trials=args.trials,
    )
    for scen in sorted({r.scenario for r in report.rows}):
        for row in report.rows_for(scen):
            print(
                f"{row.model} [{scen}]: best window={row.window} "
                f"rmse={row.rmse:.5f} params={json.dumps(row.params, sort_keys=True)}"
            )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "tuning.json").write_text(report.to_json(), "utf-8")
        print(f"wrote {out / 'tuning.json'}")
    return 0


def _cmd_train(args) -> int:
    panel, _, _ = _panel_from_args(args)
    champ = champion_defaults()
    scenario = SubscriptionSameWeek()
    ds = build_dataset(
        panel, MarketId(args.target), int(champ["window"]), scenario, DEFAULT_CALENDAR
    )
    model = ridge_fit(ds.features, ds.targets, float(champ["alpha"]))
    payload = model.to_json(
        feature_names=[f"{m.id}_lag{k}" for m, k in ds.feature_names],
    )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "champion.json").write_text(payload + "\n", "utf-8")
        print(f"wrote {out / 'champion.json'}")
    else:
        print(payload)
    return 0


def _cmd_evaluate(args) -> int:
    panel, _, _ = _panel_from_args(args)
    models = _parse_models(args.models)
    scenarios = _scenarios(args.scenario)
    if args.window == "sweep":
        windows = list(range(2, 13))
    else:
        windows = [int(args.window)]
    report = scenario_report(
        panel,
        MarketId(args.target),
        models,
        scenarios,
        DEFAULT_CALENDAR,
        seed=args.seed,
        trials=args.trials,
        windows=windows,
        desk=not args.full_scale,
        workers=args.workers,
    )
    sys.stdout.write(report.to_text())
    if len(windows) > 1:
        sys.stdout.write("\nbest window per model:\n")
        for scen in sorted({r.scenario for r in report.rows}):
            for row in report.rows_for(scen):
                if row.status == "ok":
                    sys.stdout.write(f"  {row.model} [{scen}]: {row.window}\n")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(report.to_text(), "utf-8")
        (out / "report.json").write_text(report.to_json() + "\n", "utf-8")
        figures.report_chart(report, out / "report.png")
        print(f"wrote {out / 'report.txt'}, report.json, report.png")
    if args.config:
        config = ServiceConfig.load(args.config)
        store = EventStore(config.store_path())
        from .store import Event

        store.append(Event("report", json.loads(report.to_json())))
    return 0


def _require_config(args) -> ServiceConfig:
    if not args.config:
        raise UsageError("this command needs --config pointing at a service config JSON")
    return ServiceConfig.load(args.config)


def _cmd_forecast(args) -> int:
    config = _require_config(args)
    config.store_path().parent.mkdir(parents=True, exist_ok=True)
    store = EventStore(config.store_path())
    if not store.snapshot.observations:
        from .service import _ingest_sources

        _ingest_sources(config, store)
    forecast = compute_forecast(config, store)
    print(json.dumps(forecast, sort_keys=True))
    return 0


def _cmd_cycle(args) -> int:
    config = _require_config(args)
    config.store_path().parent.mkdir(parents=True, exist_ok=True)
    store = EventStore(config.store_path())
    summary = run_weekly_cycle(config, store)
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    config = _require_config(args)
    config.store_path().parent.mkdir(parents=True, exist_ok=True)
    store = EventStore(config.store_path())
    app = create_app(config, store)
    host, _, port = config.listen_addr.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8787), log_level="warning")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "analyze": _cmd_analyze,
    "build-dataset": _cmd_build_dataset,
    "tune": _cmd_tune,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "forecast": _cmd_forecast,
    "cycle": _cmd_cycle,
    "serve": _cmd_serve,
}


def run_command(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else USAGE_ERROR
    np.random.seed(args.seed)  # belt-and-braces; all paths use explicit generators
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, UsageError):
            return USAGE_ERROR
        return USAGE_ERROR if isinstance(exc, ValueError) and "unknown" in str(exc).lower() else DATA_ERROR
    except IngestError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
