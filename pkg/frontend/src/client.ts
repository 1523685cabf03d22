import type { CompletionResponse } from "./state.js";
import { utf8ByteOffset } from "./state.js";

export interface HealthInfo {
  model_id: string;
  quantized: boolean;
  vocab_hash: string;
}

type FetchLike = typeof fetch;

export async function requestCompletion(
  endpoint: string,
  source: string,
  cursorUtf16: number,
  k = 5,
  fetchImpl: FetchLike = fetch,
): Promise<CompletionResponse> {
  const body = JSON.stringify({
    source,
    cursor: utf8ByteOffset(source, cursorUtf16),
    k,
  });
  const response = await fetchImpl(`${endpoint}/complete`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body,
  });
  if (!response.ok) {
    let detail = `${response.status}`;
    try {
      const payload = await response.json();
      if (payload && payload.error) {
        detail = payload.error;
      }
    } catch {
      // non-JSON error body; keep the status code
    }
    throw new Error(`completion failed: ${detail}`);
  }
  return (await response.json()) as CompletionResponse;
}

export async function fetchHealth(
  endpoint: string,
  fetchImpl: FetchLike = fetch,
): Promise<HealthInfo> {
  const response = await fetchImpl(`${endpoint}/health`);
  if (!response.ok) {
    throw new Error(`health check failed: ${response.status}`);
  }
  return (await response.json()) as HealthInfo;
}
