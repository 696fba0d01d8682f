import {
  ApiError,
  Catalog,
  CheckoutResponse,
  SessionState,
  SubmitResponse,
} from "./types.js";

type FetchLike = typeof fetch;

/** Typed bindings for the checkout service endpoints. Every cart change goes
 * through the service; the client never mutates state locally. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!res.ok) {
      let code = `HTTP${res.status}`;
      let message = res.statusText;
      try {
        const body = await res.json();
        if (body && typeof body.code === "string") {
          code = body.code;
          message = body.message ?? message;
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(code, message, res.status);
    }
    return (await res.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/healthz");
  }

  catalog(): Promise<Catalog> {
    return this.request("/catalog");
  }

  async openSession(): Promise<string> {
    const body = await this.request<{ session_id: string }>("/sessions", {
      method: "POST",
    });
    return body.session_id;
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.request(`/sessions/${sessionId}`);
  }

  submitItem(
    sessionId: string,
    image: Blob | ArrayBuffer,
    contentType: "image/png" | "image/jpeg" = "image/png",
  ): Promise<SubmitResponse> {
    return this.request(`/sessions/${sessionId}/items`, {
      method: "POST",
      headers: { "content-type": contentType },
      body: image,
    });
  }

  overrideLine(
    sessionId: string,
    itemId: number,
    lineNo?: number,
  ): Promise<{ cart: SessionState }> {
    const payload: { item_id: number; line_no?: number } = { item_id: itemId };
    if (lineNo !== undefined) payload.line_no = lineNo;
    return this.request(`/sessions/${sessionId}/lines`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  checkout(sessionId: string): Promise<CheckoutResponse> {
    return this.request(`/sessions/${sessionId}/checkout`, { method: "POST" });
  }
}
