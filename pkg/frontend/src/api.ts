// Thin typed client over the service's HTTP API. Every job transition the
// console performs goes through these methods and nothing else.

import type {
  ConclusionWire,
  HealthWire,
  JobWire,
  MetricReportWire,
  ReferenceBundleWire,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorType: string,
    readonly detail: string,
  ) {
    super(`${errorType}: ${detail}`);
    this.name = "ApiError";
  }
}

/** 409 from the server: stale edit or illegal transition. */
export class ConflictError extends ApiError {
  constructor(status: number, errorType: string, detail: string) {
    super(status, errorType, detail);
    this.name = "ConflictError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ClientOptions {
  baseUrl: string;
  fetchImpl?: FetchLike;
}

export type AdvanceTarget = "Searched" | "PreJudged" | "AwaitingReview" | "Written";

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(opts: ClientOptions) {
    this.baseUrl = opts.baseUrl.replace(/\/+$/, "");
    this.fetchImpl = opts.fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!res.ok) {
      let errorType = `http_${res.status}`;
      let detail = res.statusText || String(res.status);
      try {
        const payload = (await res.json()) as { error?: unknown; detail?: unknown };
        if (typeof payload.error === "string") errorType = payload.error;
        if (typeof payload.detail === "string") detail = payload.detail;
        else if (payload.detail !== undefined) detail = JSON.stringify(payload.detail);
      } catch {
        // non-JSON error body; keep the status text
      }
      if (res.status === 409) throw new ConflictError(res.status, errorType, detail);
      throw new ApiError(res.status, errorType, detail);
    }
    return (await res.json()) as T;
  }

  createJob(fact: string, opts?: { reviewMode?: boolean; k1?: number; k2?: number }): Promise<JobWire> {
    return this.request<JobWire>("POST", "/v1/jobs", {
      fact,
      review_mode: opts?.reviewMode ?? false,
      k1: opts?.k1 ?? null,
      k2: opts?.k2 ?? null,
    });
  }

  getJob(jobId: string): Promise<JobWire> {
    return this.request<JobWire>("GET", `/v1/jobs/${encodeURIComponent(jobId)}`);
  }

  listJobs(state?: string): Promise<JobWire[]> {
    const qs = state ? `?state=${encodeURIComponent(state)}` : "";
    return this.request<JobWire[]>("GET", `/v1/jobs${qs}`);
  }

  advance(jobId: string, target: AdvanceTarget): Promise<JobWire> {
    return this.request<JobWire>("POST", `/v1/jobs/${encodeURIComponent(jobId)}/advance`, {
      target_stage: target,
    });
  }

  putConclusion(
    jobId: string,
    patch: Record<string, unknown>,
    expectedVersion: number,
  ): Promise<JobWire> {
    return this.request<JobWire>("PUT", `/v1/jobs/${encodeURIComponent(jobId)}/conclusion`, {
      patch,
      expected_version: expectedVersion,
    });
  }

  evaluateJob(jobId: string, goldText: string): Promise<JobWire> {
    return this.request<JobWire>("POST", `/v1/jobs/${encodeURIComponent(jobId)}/evaluate`, {
      gold_text: goldText,
    });
  }

  evaluatePair(generatedText: string, goldText: string): Promise<MetricReportWire> {
    return this.request<MetricReportWire>("POST", "/v1/evaluate", {
      generated_text: generatedText,
      gold_text: goldText,
    });
  }

  search(fact: string, opts?: { k1?: number; k2?: number }): Promise<ReferenceBundleWire> {
    return this.request<ReferenceBundleWire>("POST", "/v1/search", {
      fact,
      k1: opts?.k1 ?? null,
      k2: opts?.k2 ?? null,
    });
  }

  health(): Promise<HealthWire> {
    return this.request<HealthWire>("GET", "/healthz");
  }
}

export type { ConclusionWire };
