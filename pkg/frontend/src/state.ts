/** Aggregated view state for the decision screen.
 *
 * Network failures never blank the screen: the last good state is kept and
 * surfaced with an offline banner instead.
 */

import {
  ApiClient,
  ApiRequestError,
  Forecast,
  HistoryPair,
  MarketSummary,
} from "./api.js";

export interface Banner {
  kind: "offline" | "empty" | "stale" | "error";
  message: string;
}

export interface DecisionViewState {
  markets: MarketSummary[];
  target: string;
  forecast: Forecast | null;
  pairs: HistoryPair[];
  maxAbsError: number | null;
  eventCount: number;
  banners: Banner[];
}

export const EMPTY_STATE: DecisionViewState = {
  markets: [],
  target: "",
  forecast: null,
  pairs: [],
  maxAbsError: null,
  eventCount: 0,
  banners: [{ kind: "empty", message: "no data yet — run a cycle" }],
};

/** One aggregated fetch; on network failure returns `previous` plus an
 * offline banner so the technician keeps the last known view. */
export async function fetchState(
  client: ApiClient,
  previous: DecisionViewState = EMPTY_STATE,
): Promise<DecisionViewState> {
  try {
    const [health, markets, history] = await Promise.all([
      client.health(),
      client.markets(),
      client.forecastHistory(),
    ]);
    let forecast: Forecast | null = null;
    const banners: Banner[] = [];
    try {
      forecast = await client.latestForecast();
    } catch (err) {
      if (err instanceof ApiRequestError && err.status === 404) {
        banners.push({ kind: "empty", message: err.message });
      } else {
        throw err;
      }
    }
    if (markets.markets.length === 0) {
      banners.push({ kind: "empty", message: "no data yet — run a cycle" });
    }
    if (forecast && !forecast.features_fresh) {
      banners.push({
        kind: "stale",
        message: "some feature prices were not yet published; latest values substituted",
      });
    }
    return {
      markets: markets.markets,
      target: markets.target,
      forecast,
      pairs: history.pairs,
      maxAbsError: history.max_abs_error,
      eventCount: health.events,
      banners,
    };
  } catch (err) {
    if (err instanceof ApiRequestError) {
      return { ...previous, banners: [{ kind: "error", message: err.message }] };
    }
    return {
      ...previous,
      banners: [{ kind: "offline", message: "service unreachable — showing last known state" }],
    };
  }
}
