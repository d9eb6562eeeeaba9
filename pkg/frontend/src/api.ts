/**
 * Thin fetch client for the crowdmpm service. Every physics number shown in
 * the studio flows through this module, so tests can mock the fetch function
 * and account for each displayed value.
 */

import type { FrameResponse, JobStatus, LayerName, Scenario } from "./types.js";

export const POLL_INTERVAL_MS = 500;
export const POLL_BACKOFF = 1.5;
export const POLL_MAX_INTERVAL_MS = 5000;

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Pull a human-readable message out of the service's error envelopes. */
export function errorMessage(status: number, body: unknown): string {
  if (body && typeof body === "object" && "detail" in body) {
    const detail = (body as { detail: unknown }).detail;
    if (typeof detail === "string") return detail;
    if (Array.isArray(detail)) {
      return detail
        .map((d) => {
          if (d && typeof d === "object" && "msg" in d) {
            const loc = Array.isArray((d as { loc?: unknown }).loc)
              ? ((d as { loc: unknown[] }).loc.join(".") + ": ")
              : "";
            return loc + String((d as { msg: unknown }).msg);
          }
          return String(d);
        })
        .join("; ");
    }
  }
  return `request failed with status ${status}`;
}

export type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

export class StudioApi {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchFn = (input, init) => globalThis.fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path, init);
    const body = await res.json().catch(() => null);
    if (!res.ok) {
      throw new ApiError(res.status, errorMessage(res.status, body));
    }
    return body as T;
  }

  createScenario(scenario: Scenario): Promise<{ id: string }> {
    return this.request("/api/scenarios", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(scenario),
    });
  }

  getScenario(id: string): Promise<Scenario> {
    return this.request(`/api/scenarios/${id}`);
  }

  submitJob(scenarioId: string, overrides: Record<string, unknown> = {}): Promise<{ job_id: string }> {
    return this.request("/api/jobs", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ scenario_id: scenarioId, overrides }),
    });
  }

  getJob(jobId: string): Promise<JobStatus> {
    return this.request(`/api/jobs/${jobId}`);
  }

  getFrame(jobId: string, frame: number, layers: LayerName[]): Promise<FrameResponse> {
    const q = encodeURIComponent(layers.join(","));
    return this.request(`/api/jobs/${jobId}/frames/${frame}?layers=${q}`);
  }

  deleteJob(jobId: string): Promise<{ id: string; deleted: boolean }> {
    return this.request(`/api/jobs/${jobId}`, { method: "DELETE" });
  }

  /**
   * Poll a job until it reaches a terminal state. Interval starts at 500 ms
   * and backs off by 1.5x up to 5 s. `onUpdate` fires for every status seen,
   * including the terminal one.
   */
  async pollJob(
    jobId: string,
    onUpdate?: (status: JobStatus) => void,
    opts: { signal?: AbortSignal; sleep?: (ms: number) => Promise<void> } = {},
  ): Promise<JobStatus> {
    const sleep = opts.sleep ?? ((ms) => new Promise<void>((r) => setTimeout(r, ms)));
    let interval = POLL_INTERVAL_MS;
    for (;;) {
      if (opts.signal?.aborted) throw new DOMException("polling aborted", "AbortError");
      const status = await this.getJob(jobId);
      onUpdate?.(status);
      if (status.status === "done" || status.status === "failed" || status.status === "cancelled") {
        return status;
      }
      await sleep(interval);
      interval = Math.min(interval * POLL_BACKOFF, POLL_MAX_INTERVAL_MS);
    }
  }
}
