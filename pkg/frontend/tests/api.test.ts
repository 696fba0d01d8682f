import { describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { ApiError } from "../src/types.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("ApiClient bindings", () => {
  it("opens a session with POST /sessions", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ session_id: "abc" }, 201));
    const client = new ApiClient("http://svc", fetchMock);
    const sid = await client.openSession();
    expect(sid).toBe("abc");
    expect(fetchMock).toHaveBeenCalledWith("http://svc/sessions", { method: "POST" });
  });

  it("fetches session state verbatim", async () => {
    const session = {
      session_id: "abc",
      state: "open",
      lines: [],
      total: 1580,
      total_display: "15.80",
      currency: "USD",
    };
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(session));
    const client = new ApiClient("http://svc", fetchMock);
    const got = await client.getSession("abc");
    expect(got.total_display).toBe("15.80");
    expect(fetchMock).toHaveBeenCalledWith("http://svc/sessions/abc", undefined);
  });

  it("submits image bytes with the image content type", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ result: {}, cart: {} }));
    const client = new ApiClient("http://svc", fetchMock);
    const bytes = new Uint8Array([1, 2, 3]).buffer;
    await client.submitItem("abc", bytes, "image/jpeg");
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe("http://svc/sessions/abc/items");
    expect(init.method).toBe("POST");
    expect(init.headers["content-type"]).toBe("image/jpeg");
    expect(init.body).toBe(bytes);
  });

  it("sends override picks as JSON", async () => {
    const fetchMock = vi.fn().mockImplementation(async () => jsonResponse({ cart: {} }));
    const client = new ApiClient("http://svc", fetchMock);
    await client.overrideLine("abc", 4);
    let [, init] = fetchMock.mock.calls[0];
    expect(JSON.parse(init.body)).toEqual({ item_id: 4 });

    await client.overrideLine("abc", 2, 1);
    [, init] = fetchMock.mock.calls[1];
    expect(JSON.parse(init.body)).toEqual({ item_id: 2, line_no: 1 });
  });

  it("checks out with POST", async () => {
    const fetchMock = vi
      .fn()
      .mockResolvedValue(jsonResponse({ receipt: {}, receipt_text: "TOTAL 1.00" }));
    const client = new ApiClient("http://svc", fetchMock);
    const out = await client.checkout("abc");
    expect(out.receipt_text).toContain("TOTAL");
    expect(fetchMock).toHaveBeenCalledWith("http://svc/sessions/abc/checkout", {
      method: "POST",
    });
  });

  it("maps service errors to ApiError with the domain code", async () => {
    const fetchMock = vi
      .fn()
      .mockResolvedValue(jsonResponse({ code: "NoObject", message: "belt is empty" }, 422));
    const client = new ApiClient("http://svc", fetchMock);
    const err = await client.submitItem("abc", new Uint8Array([0]).buffer).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("NoObject");
    expect(err.status).toBe(422);
  });

  it("keeps a usable code on non-JSON errors", async () => {
    const fetchMock = vi.fn().mockResolvedValue(new Response("boom", { status: 500 }));
    const client = new ApiClient("http://svc", fetchMock);
    const err = await client.catalog().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("HTTP500");
  });
});
