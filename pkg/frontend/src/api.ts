import { ExplanationResponse, HealthResponse, PredictionResponse } from "./types";

export interface ExplainParams {
  segments?: number;
  samples?: number;
  seed?: number;
}

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(`API ${status}: ${detail}`);
    this.status = status;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin client for the inference service. Only /health, /predict and
 * /explain are used; overlay paths returned by /explain are resolved
 * against the same base URL.
 */
export class ApiClient {
  readonly baseUrl: string;
  private fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  resolve(path: string): string {
    return path.startsWith("/") ? this.baseUrl + path : path;
  }

  private async unwrap<T>(res: Response): Promise<T> {
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = await res.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body, keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  async health(): Promise<HealthResponse> {
    return this.unwrap(await this.fetchFn(`${this.baseUrl}/health`));
  }

  async predict(file: Blob, fileName = "upload"): Promise<PredictionResponse> {
    const form = new FormData();
    form.append("image", file, fileName);
    const res = await this.fetchFn(`${this.baseUrl}/predict`, {
      method: "POST",
      body: form,
    });
    return this.unwrap(res);
  }

  async explain(
    file: Blob,
    params: ExplainParams = {},
    fileName = "upload",
  ): Promise<ExplanationResponse> {
    const form = new FormData();
    form.append("image", file, fileName);
    if (params.segments !== undefined) form.append("segments", String(params.segments));
    if (params.samples !== undefined) form.append("samples", String(params.samples));
    if (params.seed !== undefined) form.append("seed", String(params.seed));
    const res = await this.fetchFn(`${this.baseUrl}/explain`, {
      method: "POST",
      body: form,
    });
    return this.unwrap(res);
  }
}
