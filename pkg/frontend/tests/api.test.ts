import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, VersionConflictError } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("api client", () => {
  it("builds failure queries from filters", async () => {
    const urls: string[] = [];
    const client = new ApiClient("http://api", async (url) => {
      urls.push(url);
      return jsonResponse(200, { items: [], total: 0, page: 2, page_size: 10 });
    });
    await client.listFailures("r1", {
      primary: "Functional", secondary: "C.1", model: "m", unreviewedOnly: true,
    }, 2, 10);
    const url = new URL(urls[0]);
    expect(url.pathname).toBe("/runs/r1/failures");
    expect(url.searchParams.get("primary")).toBe("Functional");
    expect(url.searchParams.get("secondary")).toBe("C.1");
    expect(url.searchParams.get("unreviewed_only")).toBe("true");
    expect(url.searchParams.get("page")).toBe("2");
  });

  it("maps version_conflict to its own error type", async () => {
    const client = new ApiClient("", async () =>
      jsonResponse(409, { error: { code: "version_conflict", message: "stale" } }));
    await expect(client.postLabel("k", {
      label_path: "C.2", reviewer_id: "a", base_version: 0,
    })).rejects.toBeInstanceOf(VersionConflictError);
  });

  it("maps other error bodies to ApiError with the server code", async () => {
    const client = new ApiClient("", async () =>
      jsonResponse(404, { error: { code: "not_found", message: "nope" } }));
    try {
      await client.getSample("missing");
      expect.unreachable();
    } catch (error) {
      expect(error).toBeInstanceOf(ApiError);
      expect((error as ApiError).code).toBe("not_found");
      expect((error as ApiError).status).toBe(404);
    }
  });

  it("returns the export body as plain text", async () => {
    const client = new ApiClient("", async () =>
      new Response('{"task_id": "t"}\n', { status: 200 }));
    expect(await client.getExport("r1")).toBe('{"task_id": "t"}\n');
  });
});
