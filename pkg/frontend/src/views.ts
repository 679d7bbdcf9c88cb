/** Pure render functions: view data in, HTML string out.
 *
 * Keeping these free of fetch and DOM state makes every screen testable as a
 * plain function, and guarantees each displayed number traces to exactly one
 * API response field.
 */

import { CorrelationsResponse, Forecast, HistoryPair, ReportResponse } from "./api.js";
import { Banner, DecisionViewState } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Prices are EUR/kg to 3 decimals everywhere in the UI. */
export function formatPrice(value: number | null): string {
  return value === null ? "—" : value.toFixed(3);
}

export function directionArrow(direction: Forecast["direction"]): string {
  return direction === "Up" ? "▲" : direction === "Down" ? "▼" : "▬";
}

export function renderBanners(banners: Banner[]): string {
  return banners
    .map((b) => `<div class="banner banner-${b.kind}">${escapeHtml(b.message)}</div>`)
    .join("");
}

export function renderForecastCard(forecast: Forecast | null): string {
  if (!forecast) {
    return `<section class="forecast-card empty">No forecast yet. Run a cycle.</section>`;
  }
  return [
    `<section class="forecast-card direction-${forecast.direction.toLowerCase()}">`,
    `<h2>${escapeHtml(forecast.market)} · week ${escapeHtml(forecast.week)}</h2>`,
    `<p class="price">${formatPrice(forecast.predicted_price)} <span class="arrow">${directionArrow(forecast.direction)}</span></p>`,
    `<p class="baseline">last observed ${formatPrice(forecast.last_observed)}</p>`,
    `<p class="fingerprint">model ${escapeHtml(forecast.model_fingerprint)} · data ${forecast.features_fresh ? "fresh" : "stale"}</p>`,
    `</section>`,
  ].join("\n");
}

export function renderMarketsTable(state: DecisionViewState): string {
  const rows = state.markets
    .map((m) => {
      const target = m.market === state.target ? ` class="target"` : "";
      return `<tr${target}><td>${escapeHtml(m.market)}</td><td>${escapeHtml(m.weekday ?? "—")}</td><td>${escapeHtml(m.latest_week ?? "—")}</td><td>${formatPrice(m.latest_price)}</td></tr>`;
    })
    .join("\n");
  return [
    `<table class="markets">`,
    `<thead><tr><th>Market</th><th>Publishes</th><th>Latest week</th><th>Price</th></tr></thead>`,
    `<tbody>${rows}</tbody>`,
    `</table>`,
  ].join("\n");
}

export function renderSettlementForm(forecastWeek: string | null): string {
  return [
    `<form id="settlement-form">`,
    `<label>Week <input name="week" value="${escapeHtml(forecastWeek ?? "")}" required></label>`,
    `<label>Agreed price <input name="agreed_price" type="number" step="0.001" min="0.001" required></label>`,
    `<label>Entered by <input name="entered_by" required></label>`,
    `<button type="submit">Record settlement</button>`,
    `<span id="settlement-error" class="inline-error"></span>`,
    `</form>`,
  ].join("\n");
}

export function renderDecisionView(state: DecisionViewState): string {
  return [
    renderBanners(state.banners),
    renderForecastCard(state.forecast),
    renderMarketsTable(state),
    renderSettlementForm(state.forecast?.week ?? null),
  ].join("\n");
}

/** Dual-line SVG chart of predicted vs agreed prices, one point per paired
 * week returned by the API — never more, never fewer. */
export function renderHistoryChart(
  pairs: HistoryPair[],
  maxAbsError: number | null,
  width = 640,
  height = 240,
): string {
  if (pairs.length === 0) {
    return `<section class="history empty">No settled weeks yet.</section>`;
  }
  const values = pairs.flatMap((p) => [p.predicted, p.agreed]);
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1;
  const pad = 10;
  const x = (i: number) =>
    pairs.length === 1 ? width / 2 : pad + (i * (width - 2 * pad)) / (pairs.length - 1);
  const y = (v: number) => height - pad - ((v - lo) * (height - 2 * pad)) / span;
  const line = (pick: (p: HistoryPair) => number) =>
    pairs.map((p, i) => `${x(i).toFixed(1)},${y(pick(p)).toFixed(1)}`).join(" ");
  const points = (cls: string, pick: (p: HistoryPair) => number) =>
    pairs
      .map(
        (p, i) =>
          `<circle class="${cls}" data-week="${escapeHtml(p.week)}" cx="${x(i).toFixed(1)}" cy="${y(pick(p)).toFixed(1)}" r="3"/>`,
      )
      .join("\n");
  return [
    `<section class="history">`,
    `<svg viewBox="0 0 ${width} ${height}" role="img" aria-label="predicted vs agreed prices">`,
    `<polyline class="predicted" fill="none" points="${line((p) => p.predicted)}"/>`,
    `<polyline class="agreed" fill="none" points="${line((p) => p.agreed)}"/>`,
    points("predicted", (p) => p.predicted),
    points("agreed", (p) => p.agreed),
    `</svg>`,
    `<p class="max-gap">max weekly gap: ${maxAbsError === null ? "—" : formatPrice(maxAbsError)}</p>`,
    `</section>`,
  ].join("\n");
}

export function renderCorrelationsView(corr: CorrelationsResponse): string {
  const header = corr.markets.map((m) => `<th>${escapeHtml(m)}</th>`).join("");
  const rows = corr.r
    .map((row, i) => {
      const cells = row
        .map((v) => {
          // map r in [-1, 1] to a white->steel-blue ramp
          const intensity = Math.round(((v + 1) / 2) * 255);
          return `<td style="background: rgb(${255 - intensity}, ${255 - Math.round(intensity / 3)}, 255)">${v.toFixed(3)}</td>`;
        })
        .join("");
      return `<tr><th>${escapeHtml(corr.markets[i] ?? "")}</th>${cells}</tr>`;
    })
    .join("\n");
  return `<table class="heatmap"><thead><tr><th></th>${header}</tr></thead><tbody>${rows}</tbody></table>`;
}

export function renderReportView(report: ReportResponse): string {
  const fmt = (v: number | null) => (v === null ? "—" : v.toFixed(5));
  const scenarios = [...new Set(report.rows.map((r) => r.scenario))].sort();
  const byModel = new Map<string, Map<string, ReportResponse["rows"][number]>>();
  for (const row of report.rows) {
    if (!byModel.has(row.model)) byModel.set(row.model, new Map());
    byModel.get(row.model)!.set(row.scenario, row);
  }
  const header = scenarios.map((s) => `<th>${escapeHtml(s)} RMSE</th><th>${escapeHtml(s)} R²</th>`).join("");
  const rows = [...byModel.entries()]
    .map(([model, cells]) => {
      const tds = scenarios
        .map((s) => {
          const cell = cells.get(s);
          if (!cell || cell.status !== "ok") return `<td>—</td><td>—</td>`;
          return `<td>${fmt(cell.rmse)}</td><td>${fmt(cell.r2)}</td>`;
        })
        .join("");
      return `<tr><td>${escapeHtml(model)}</td>${tds}</tr>`;
    })
    .join("\n");
  return [
    `<table class="report">`,
    `<thead><tr><th>Model</th>${header}</tr></thead>`,
    `<tbody>${rows}</tbody>`,
    `</table>`,
    `<p class="report-meta">seed ${report.seed} · ${report.trials} trials · ${report.n_test} test points · data ${escapeHtml(report.data_fingerprint)}</p>`,
  ].join("\n");
}

/** Side-by-side what-if card; the adjusted number comes from the service. */
export function renderWhatIfComparison(baseline: Forecast, whatif: Forecast): string {
  const delta = whatif.predicted_price - baseline.predicted_price;
  return [
    `<section class="whatif">`,
    `<div class="col baseline"><h3>Baseline</h3><p>${formatPrice(baseline.predicted_price)} ${directionArrow(baseline.direction)}</p></div>`,
    `<div class="col adjusted"><h3>What-if</h3><p>${formatPrice(whatif.predicted_price)} ${directionArrow(whatif.direction)}</p></div>`,
    `<p class="delta">difference ${delta >= 0 ? "+" : ""}${delta.toFixed(4)}</p>`,
    `</section>`,
  ].join("\n");
}
