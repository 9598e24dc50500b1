import { ExplanationResponse, PredictionResponse } from "../src/types";

export function samplePrediction(
  overrides: Partial<PredictionResponse> = {},
): PredictionResponse {
  return {
    schema_version: 1,
    vegetable: {
      label: "tomato",
      probs: { tomato: 0.82, brinjal: 0.11, beans: 0.05, lemon: 0.02 },
    },
    spoilage: {
      label: "fresh",
      probs: { fresh: 0.7, slightly_spoiled: 0.2, completely_spoiled: 0.1 },
    },
    day_estimate: 2.3,
    remaining_shelf_life_days: 4.5,
    model_id: "mobilenetv2_deit_fusion",
    latency_ms: 12.0,
    ...overrides,
  };
}

export function sampleExplanation(
  overrides: Partial<ExplanationResponse> = {},
): ExplanationResponse {
  return {
    schema_version: 1,
    params: { segments: 50, samples: 500, seed: 0 },
    weights: {
      vegetable: [0.3, -0.1, 0.05],
      spoilage: [0.1, 0.2, -0.05],
      day: [-0.4, 0.02, 0.1],
    },
    targets: { vegetable: 0, spoilage: 0 },
    surrogate_fit_r2: { vegetable: 0.91, spoilage: 0.88, day: 0.85 },
    n_segments: 3,
    warnings: [],
    overlays: {
      vegetable: "/overlays/overlay_0_vegetable.png",
      spoilage: "/overlays/overlay_0_spoilage.png",
      day: "/overlays/overlay_0_day.png",
    },
    model_id: "mobilenetv2_deit_fusion",
    ...overrides,
  };
}

export interface StubCall {
  url: string;
  method: string;
  body?: FormData;
}

export interface StubServer {
  fetch: (input: string, init?: RequestInit) => Promise<Response>;
  calls: StubCall[];
  callsTo(path: string): StubCall[];
}

type Handler = (call: StubCall) => { status?: number; body: unknown } | Promise<{ status?: number; body: unknown }>;

/** In-process stand-in for the inference service, keyed by URL path. */
export function stubServer(routes: Record<string, Handler>): StubServer {
  const calls: StubCall[] = [];
  return {
    calls,
    callsTo(path: string) {
      return calls.filter((c) => new URL(c.url).pathname === path);
    },
    async fetch(input: string, init?: RequestInit): Promise<Response> {
      const call: StubCall = {
        url: input,
        method: init?.method ?? "GET",
        body: init?.body instanceof FormData ? init.body : undefined,
      };
      calls.push(call);
      const handler = routes[new URL(input).pathname];
      if (!handler) {
        return new Response(JSON.stringify({ detail: "not found" }), { status: 404 });
      }
      const { status = 200, body } = await handler(call);
      return new Response(JSON.stringify(body), {
        status,
        headers: { "content-type": "application/json" },
      });
    },
  };
}

export function imageFile(name = "tomato.png"): File {
  return new File([new Uint8Array([137, 80, 78, 71])], name, { type: "image/png" });
}
