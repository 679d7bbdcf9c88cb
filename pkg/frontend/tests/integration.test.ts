/** End-to-end tests against the real Python service over HTTP.
 *
 * A uvicorn instance is spawned on a throwaway port with a synthetic price
 * panel; everything below talks to it exactly the way the browser would.
 */

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, openSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiRequestError } from "../src/api.js";
import { fetchState } from "../src/state.js";
import { renderHistoryChart } from "../src/views.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;
const PKG_ROOT = join(dirname(fileURLToPath(import.meta.url)), "..", "..");

let workdir: string;
let server: ChildProcess;
const client = new ApiClient(BASE);

async function waitForHealth(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      await client.health();
      return;
    } catch {
      if (Date.now() > deadline) throw new Error("service did not come up");
      await new Promise((r) => setTimeout(r, 250));
    }
  }
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "lonjacast-ui-"));
  execFileSync(
    "python3",
    [
      "-c",
      "import sys; from lonjacast.synthetic import generate_csv; sys.stdout.write(generate_csv(seed=7, n_weeks=120))",
    ],
    { cwd: PKG_ROOT, stdio: ["ignore", openSync(join(workdir, "prices.csv"), "w"), "inherit"] },
  );
  const config = {
    sources: [join(workdir, "prices.csv")],
    data_dir: join(workdir, "data"),
    listen_addr: `127.0.0.1:${PORT}`,
  };
  writeFileSync(join(workdir, "service.json"), JSON.stringify(config));
  server = spawn("python3", ["-m", "lonjacast.cli", "serve", "--config", join(workdir, "service.json")], {
    cwd: PKG_ROOT,
    stdio: "ignore",
  });
  await waitForHealth();
  await client.runCycle(); // ingest the panel and produce the first forecast
}, 60000);

afterAll(() => {
  server?.kill();
  rmSync(workdir, { recursive: true, force: true });
});

describe("aggregated view state", () => {
  it("markets list equals /api/markets and a forecast is present", async () => {
    const [state, markets] = await Promise.all([fetchState(client), client.markets()]);
    expect(state.markets).toEqual(markets.markets);
    expect(state.markets.length).toBe(8);
    expect(state.forecast).not.toBeNull();
    expect(["Up", "Down", "Flat"]).toContain(state.forecast!.direction);
  });
});

describe("settlement round-trip", () => {
  it("a settlement appears in the series, grows the history chart, and feeds the next cycle", async () => {
    const before = await client.health();
    const forecast = await client.latestForecast();
    const week = forecast.week;
    const agreed = forecast.predicted_price + 0.01;

    await client.submitSettlement(week, agreed, "vitest");

    const series = await client.series("ES-LLEIDA");
    const settled = series.observations.find((o) => o.week === week);
    expect(settled?.price).toBeCloseTo(agreed, 6);

    const history = await client.forecastHistory();
    expect(history.pairs.map((p) => p.week)).toContain(week);
    const pair = history.pairs.find((p) => p.week === week)!;
    expect(pair.agreed).toBeCloseTo(agreed, 6);
    expect(pair.abs_error).toBeCloseTo(0.01, 6);

    // chart point count equals the paired-week count from the API
    const chart = renderHistoryChart(history.pairs, history.max_abs_error);
    expect(chart.match(/<circle class="agreed"/g)).toHaveLength(history.pairs.length);

    // the settlement is a new event and changes the next cycle's training input
    const after = await client.health();
    expect(after.events).toBeGreaterThan(before.events);
    const { summary } = await client.runCycle();
    expect(summary.status).toContain("ok");
    const next = await client.latestForecast();
    expect(next.created_at).not.toBe(forecast.created_at);
  }, 30000);

  it("re-settling the same week supersedes the pair instead of adding one", async () => {
    const history = await client.forecastHistory();
    const week = history.pairs[history.pairs.length - 1]!.week;
    const revised = history.pairs[history.pairs.length - 1]!.agreed + 0.005;

    await client.submitSettlement(week, revised, "vitest");
    const updated = await client.forecastHistory();
    expect(updated.pairs.length).toBe(history.pairs.length);
    expect(updated.pairs.find((p) => p.week === week)!.agreed).toBeCloseTo(revised, 6);
  });

  it("rejects a non-positive price with the service's reason, changing nothing", async () => {
    const before = await client.forecastHistory();
    const err = await client.submitSettlement("2018-W01", -1, "vitest").catch((e) => e);
    expect(err).toBeInstanceOf(ApiRequestError);
    expect((err as ApiRequestError).status).toBe(422);
    expect((err as ApiRequestError).message).toContain("positive");
    const after = await client.forecastHistory();
    expect(after.pairs).toEqual(before.pairs);
  });
});

describe("what-if probe", () => {
  it("empty overrides equal the baseline", async () => {
    const { baseline, whatif } = await client.whatIf([]);
    expect(whatif.predicted_price).toBe(baseline.predicted_price);
  });

  it("responds under a second, changes the prediction, and persists nothing", async () => {
    const before = await client.health();
    const forecast = await client.latestForecast();
    const started = Date.now();
    // the earliest-publishing market contributes a current-week feature, so
    // overriding it must move the champion's prediction
    const { baseline, whatif } = await client.whatIf([
      { market: "ES-SALAMANCA", week: forecast.week, price: forecast.last_observed + 0.3 },
    ]);
    expect(Date.now() - started).toBeLessThan(1000);
    expect(whatif.predicted_price).not.toBe(baseline.predicted_price);
    const after = await client.health();
    expect(after.events).toBe(before.events);
  });

  it("unknown market is rejected inline", async () => {
    const err = await client
      .whatIf([{ market: "ES-NOWHERE", week: "2018-W10", price: 1.2 }])
      .catch((e) => e);
    expect(err).toBeInstanceOf(ApiRequestError);
    expect((err as ApiRequestError).status).toBe(422);
  });
});
