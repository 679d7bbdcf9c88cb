/** Typed client for the forecasting service's HTTP JSON API.
 *
 * Every number the dashboard shows comes straight out of one of these
 * response fields; the client never recomputes prices or metrics.
 */

export interface MarketSummary {
  market: string;
  weekday: string | null;
  latest_week: string | null;
  latest_price: number | null;
}

export interface MarketsResponse {
  markets: MarketSummary[];
  target: string;
}

export interface SeriesObservation {
  week: string;
  price: number;
  weekday: string;
}

export interface SeriesResponse {
  market: string;
  observations: SeriesObservation[];
}

export interface CorrelationsResponse {
  markets: string[];
  r: number[][];
}

export interface Forecast {
  market: string;
  week: string;
  predicted_price: number;
  direction: "Up" | "Down" | "Flat";
  model_fingerprint: string;
  last_observed: number;
  features_fresh: boolean;
  created_at: string;
}

export interface HistoryPair {
  week: string;
  predicted: number;
  agreed: number;
  abs_error: number;
}

export interface HistoryResponse {
  forecasts: unknown[];
  settlements: unknown[];
  pairs: HistoryPair[];
  max_abs_error: number | null;
}

export interface HealthResponse {
  status: string;
  last_cycle: string | null;
  events: number;
}

export interface CycleSummary {
  new_observations: number;
  stale: boolean;
  status: string;
  forecast_week?: string | null;
  predicted_price?: number;
  direction?: string;
}

export interface SettlementRecord {
  market: string;
  week: string;
  agreed_price: string;
  entered_by: string;
  entered_at: string;
  weekday: string;
}

export interface WhatIfOverride {
  market: string;
  week: string;
  price: number;
}

export interface WhatIfResponse {
  baseline: Forecast;
  whatif: Forecast;
}

export interface ReportRow {
  model: string;
  scenario: string;
  window: number;
  rmse: number | null;
  r2: number | null;
  params: Record<string, unknown>;
  status: string;
}

export interface ReportResponse {
  rows: ReportRow[];
  seed: number;
  trials: number;
  n_test: number;
  data_fingerprint: string;
}

export interface ApiError {
  error: { code: string; message: string };
}

/** Raised for any non-2xx response; carries the service's verbatim message. */
export class ApiRequestError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiRequestError";
  }
}

async function asJson<T>(res: Response): Promise<T> {
  const body = (await res.json()) as T | ApiError;
  if (!res.ok) {
    const err = body as ApiError;
    throw new ApiRequestError(
      res.status,
      err.error?.code ?? "unknown",
      err.error?.message ?? `HTTP ${res.status}`,
    );
  }
  return body as T;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private get<T>(path: string): Promise<T> {
    return this.fetchFn(`${this.baseUrl}${path}`).then((res) => asJson<T>(res));
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((res) => asJson<T>(res));
  }

  health(): Promise<HealthResponse> {
    return this.get("/api/health");
  }

  markets(): Promise<MarketsResponse> {
    return this.get("/api/markets");
  }

  series(market: string, range?: { from?: string; to?: string }): Promise<SeriesResponse> {
    const params = new URLSearchParams();
    if (range?.from) params.set("from", range.from);
    if (range?.to) params.set("to", range.to);
    const qs = params.toString();
    return this.get(`/api/series/${encodeURIComponent(market)}${qs ? `?${qs}` : ""}`);
  }

  correlations(): Promise<CorrelationsResponse> {
    return this.get("/api/correlations");
  }

  latestForecast(): Promise<Forecast> {
    return this.get("/api/forecast/latest");
  }

  forecastHistory(): Promise<HistoryResponse> {
    return this.get("/api/forecast/history");
  }

  report(): Promise<ReportResponse> {
    return this.get("/api/report");
  }

  runCycle(): Promise<{ summary: CycleSummary }> {
    return this.post("/api/cycle", {});
  }

  submitSettlement(week: string, agreedPrice: number, enteredBy: string): Promise<{ recorded: SettlementRecord }> {
    return this.post("/api/settlement", {
      week,
      agreed_price: agreedPrice,
      entered_by: enteredBy,
    });
  }

  whatIf(overrides: WhatIfOverride[]): Promise<WhatIfResponse> {
    return this.post("/api/whatif", { overrides });
  }
}
