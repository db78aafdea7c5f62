import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, OfflineError } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  it("fetches and parses JSON documents", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ total: 0, items: [] }));
    vi.stubGlobal("fetch", fetchMock);
    const client = new ApiClient("http://x");
    const page = await client.getErrors(0, 10);
    expect(page.total).toBe(0);
    expect(fetchMock).toHaveBeenCalledWith("http://x/errors?offset=0&limit=10", undefined);
  });

  it("posts annotations as JSON", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ revision: 3 }, 201));
    vi.stubGlobal("fetch", fetchMock);
    const client = new ApiClient("");
    const ack = await client.postErrorAnnotation("s1", {
      category: "low_quality",
      reviewer: "me",
    });
    expect(ack.revision).toBe(3);
    const [url, init] = fetchMock.mock.calls[0]!;
    expect(url).toBe("/errors/s1/annotation");
    expect(JSON.parse((init as RequestInit).body as string).category).toBe("low_quality");
  });

  it("raises ApiError with the server message on 4xx", async () => {
    // fresh Response per call: a body is single-use
    vi.stubGlobal(
      "fetch",
      vi.fn().mockImplementation(() =>
        Promise.resolve(jsonResponse({ error: "invalid category" }, 400)),
      ),
    );
    const client = new ApiClient("");
    await expect(
      client.postErrorAnnotation("s1", { category: "nope", reviewer: "me" }),
    ).rejects.toThrowError(ApiError);
    await expect(
      client.postErrorAnnotation("s1", { category: "nope", reviewer: "me" }),
    ).rejects.toThrow("invalid category");
  });

  it("raises OfflineError when the network fails", async () => {
    vi.stubGlobal("fetch", vi.fn().mockRejectedValue(new TypeError("refused")));
    const client = new ApiClient("http://down");
    await expect(client.getTaxonomy()).rejects.toThrowError(OfflineError);
  });

  it("builds audio URLs", () => {
    expect(new ApiClient("http://x").audioUrl("a b")).toBe("http://x/audio/a%20b");
  });
});
