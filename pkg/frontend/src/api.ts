/**
 * Typed client for the feedback service.
 *
 * Every mutating call carries the model version the operator was looking at;
 * the service answers 409 when that version is stale, which surfaces here as
 * StaleVersionError so the caller can refetch and prompt for a retry. The
 * fetch function is injectable for tests.
 */

import type {
  FeedbackRequest,
  ModelResponse,
  ScoresResponse,
  WindowResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class StaleVersionError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "StaleVersionError";
  }
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const payload = await response.json();
    return typeof payload.detail === "string"
      ? payload.detail
      : JSON.stringify(payload);
  } catch {
    return response.statusText;
  }
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.base + path);
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return response.json() as Promise<T>;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (response.status === 409) {
      throw new StaleVersionError(await errorDetail(response));
    }
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return response.json() as Promise<T>;
  }

  getModel(): Promise<ModelResponse> {
    return this.get("/api/model");
  }

  getScores(from: number, to: number, smoothing = 1): Promise<ScoresResponse> {
    const params = new URLSearchParams({
      from: String(from),
      to: String(to),
      smoothing: String(smoothing),
    });
    return this.get(`/api/scores?${params}`);
  }

  getWindow(start: number): Promise<WindowResponse> {
    return this.get(`/api/window/${start}`);
  }

  postFeedback(request: FeedbackRequest): Promise<{ new_version: number }> {
    return this.post("/api/feedback", request);
  }

  postRollback(version: number): Promise<{ active_version: number }> {
    return this.post("/api/rollback", { version });
  }
}
