import { PredictRequest, PredictResponse, ZonesResponse } from "./types.js";

/** Thin client over the service's three endpoints.
 *
 * Keeps a single predict request in flight: a new submit aborts the old
 * one, and responses from superseded requests are discarded by id.
 */
export class ApiClient {
  private requestId = 0;
  private controller: AbortController | null = null;

  constructor(private baseUrl: string = "") {}

  async health(): Promise<{ status: string }> {
    const r = await fetch(`${this.baseUrl}/api/health`);
    if (!r.ok) throw new Error(`health check failed: ${r.status}`);
    return r.json();
  }

  async zones(): Promise<ZonesResponse> {
    const r = await fetch(`${this.baseUrl}/api/zones`);
    if (!r.ok) throw new Error(`zones fetch failed: ${r.status}`);
    return r.json();
  }

  /** Resolves to null when a newer predict call superseded this one. */
  async predict(body: PredictRequest): Promise<PredictResponse | null> {
    const id = ++this.requestId;
    this.controller?.abort();
    this.controller = new AbortController();
    let r: Response;
    try {
      r = await fetch(`${this.baseUrl}/api/predict`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
        signal: this.controller.signal,
      });
    } catch (err) {
      if ((err as Error).name === "AbortError") return null;
      throw err;
    }
    if (id !== this.requestId) return null; // stale
    if (!r.ok) {
      const detail = await r.text();
      throw new Error(`predict failed (${r.status}): ${detail}`);
    }
    return r.json();
  }
}
