/** Browser entry point: hash routing between the four views and wiring for
 * the settlement form and what-if probe.  At most one mutation is in flight
 * at a time, and the history chart only updates after the server confirms a
 * settlement — no optimistic UI for money.
 */

import { ApiClient, ApiRequestError, WhatIfOverride } from "./api.js";
import { DecisionViewState, EMPTY_STATE, fetchState } from "./state.js";
import {
  renderCorrelationsView,
  renderDecisionView,
  renderHistoryChart,
  renderReportView,
  renderWhatIfComparison,
} from "./views.js";

type Route = "decision" | "history" | "correlations" | "report";

const ROUTES: Route[] = ["decision", "history", "correlations", "report"];

export class App {
  private state: DecisionViewState = EMPTY_STATE;
  private mutationInFlight = false;

  constructor(
    private readonly client: ApiClient,
    private readonly root: HTMLElement,
  ) {}

  currentRoute(): Route {
    const hash = window.location.hash.replace(/^#\//, "") as Route;
    return ROUTES.includes(hash) ? hash : "decision";
  }

  async refresh(): Promise<void> {
    this.state = await fetchState(this.client, this.state);
    await this.renderRoute();
  }

  private nav(): string {
    const current = this.currentRoute();
    return `<nav>${ROUTES.map(
      (r) => `<a href="#/${r}" class="${r === current ? "active" : ""}">${r}</a>`,
    ).join(" ")}</nav>`;
  }

  async renderRoute(): Promise<void> {
    const route = this.currentRoute();
    let body: string;
    try {
      if (route === "history") {
        body = renderHistoryChart(this.state.pairs, this.state.maxAbsError);
      } else if (route === "correlations") {
        body = renderCorrelationsView(await this.client.correlations());
      } else if (route === "report") {
        body = renderReportView(await this.client.report());
      } else {
        body = renderDecisionView(this.state);
      }
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      body = `<div class="banner banner-error">${message}</div>`;
    }
    this.root.innerHTML = this.nav() + body;
    if (route === "decision") this.wireDecisionForms();
  }

  private wireDecisionForms(): void {
    const form = this.root.querySelector<HTMLFormElement>("#settlement-form");
    form?.addEventListener("submit", (evt) => {
      evt.preventDefault();
      const data = new FormData(form);
      void this.submitSettlement(
        String(data.get("week") ?? ""),
        Number(data.get("agreed_price") ?? 0),
        String(data.get("entered_by") ?? ""),
      );
    });
  }

  async submitSettlement(week: string, agreedPrice: number, enteredBy: string): Promise<boolean> {
    if (this.mutationInFlight) return false;
    this.mutationInFlight = true;
    try {
      await this.client.submitSettlement(week, agreedPrice, enteredBy);
      await this.refresh(); // chart update only after server confirmation
      return true;
    } catch (err) {
      const slot = this.root.querySelector("#settlement-error");
      if (slot) {
        slot.textContent = err instanceof ApiRequestError ? err.message : "request failed";
      }
      return false;
    } finally {
      this.mutationInFlight = false;
    }
  }

  async probeWhatIf(overrides: WhatIfOverride[]): Promise<string> {
    const { baseline, whatif } = await this.client.whatIf(overrides);
    return renderWhatIfComparison(baseline, whatif);
  }
}

export function start(baseUrl: string, root: HTMLElement): App {
  const app = new App(new ApiClient(baseUrl), root);
  window.addEventListener("hashchange", () => void app.renderRoute());
  void app.refresh();
  return app;
}
