import { describe, expect, it } from "vitest";

import { ApiError, createApiClient } from "../src/api";
import { ROOMS, ROOM_DETAIL, SEARCH_RESPONSES, fixtureFetch } from "./fixtures";

const api = createApiClient({ baseUrl: "http://test", fetchImpl: fixtureFetch() });

describe("api client", () => {
  it("lists rooms", async () => {
    expect(await api.rooms()).toEqual(ROOMS);
  });

  it("loads room detail", async () => {
    expect(await api.room("c0r0")).toEqual(ROOM_DETAIL);
  });

  it("raises ApiError with detail for unknown rooms", async () => {
    const err = await api.room("nope").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(404);
    expect(err.detail.code).toBe("unknown_room");
  });

  it("posts search requests and returns the payload unchanged", async () => {
    const out = await api.search({ room_id: "c0r0", k: 6, strategy: "simple" });
    expect(out).toEqual(SEARCH_RESPONSES.simple);
  });

  it("surfaces OOV token diagnostics from 422 responses", async () => {
    const err = await api
      .search({ text_query: "zzzz", k: 6, strategy: "simple" })
      .catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(422);
    expect(err.detail.oov_tokens).toEqual(["zzzz"]);
  });

  it("handles non-JSON error bodies", async () => {
    const broken = createApiClient({
      baseUrl: "http://test",
      fetchImpl: async () => new Response("boom", { status: 500 }),
    });
    const err = await broken.rooms().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.detail.code).toBe("http_error");
  });

  it("builds media urls relative to the base", () => {
    expect(api.mediaUrl("images/a.png")).toBe("http://test/media/images/a.png");
    expect(api.mediaUrl("/images/a.png")).toBe("http://test/media/images/a.png");
  });
});
