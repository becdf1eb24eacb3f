import { beforeEach, describe, expect, it } from "vitest";

import { createApiClient } from "../src/api";
import { formatScore } from "../src/render";
import { setupConsole } from "../src/main";
import { ROOM_DETAIL, SEARCH_RESPONSES, fixtureFetch } from "./fixtures";

function flush() {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

describe("console against the fixture server", () => {
  let root: HTMLElement;
  let handles: ReturnType<typeof setupConsole>;

  beforeEach(async () => {
    document.body.innerHTML = "<div id='root'></div>";
    root = document.getElementById("root")!;
    const api = createApiClient({ baseUrl: "http://fixture", fetchImpl: fixtureFetch() });
    handles = setupConsole(root, api);
    await flush();
  });

  it("lists fixture rooms with category options", () => {
    expect(root.querySelectorAll(".room-card").length).toBe(3);
    const options = [...root.querySelectorAll("#category-filter option")].map(
      (o) => (o as HTMLOptionElement).value,
    );
    expect(options).toEqual(["", "bedroom", "kitchen"]);
  });

  it("round-trips scores byte-for-byte across a strategy toggle", async () => {
    // Select a room, add the text query, search with the default strategy.
    const input = root.querySelector<HTMLInputElement>("#text-input")!;
    input.value = "white";
    input.dispatchEvent(new Event("change"));
    await handles.selectRoom("c0r0");
    await flush();

    // Toggle to the other strategy; the superseded response stays beside it.
    const toggle = root.querySelector<HTMLSelectElement>("#strategy-toggle")!;
    toggle.value = "simple";
    toggle.dispatchEvent(new Event("change"));
    await flush();

    const columns = [...root.querySelectorAll(".result-column")] as HTMLElement[];
    expect(columns.map((c) => c.dataset.strategy)).toEqual([
      "simple",
      "feature_similarity",
    ]);
    for (const column of columns) {
      const payload = SEARCH_RESPONSES[column.dataset.strategy!];
      const rendered = [...column.querySelectorAll(".card-score")].map(
        (s) => s.textContent,
      );
      const expected = payload.groups[0].results.map((r) => formatScore(r.score));
      expect(rendered).toEqual(expected);
    }
  });

  it("renders one labeled overlay box per kept detection", async () => {
    await handles.selectRoom("c0r0");
    await flush();
    const boxes = root.querySelectorAll("#overlay .detection-box");
    expect(boxes.length).toBe(ROOM_DETAIL.kept_detections.length);
    const labels = [...root.querySelectorAll("#overlay text")].map((t) => t.textContent);
    expect(labels).toEqual(["chair 0.90", "table 0.55"]);
  });

  it("re-queries when k changes", async () => {
    await handles.selectRoom("c0r0");
    await flush();
    const before = handles.session.entries.length;
    const slider = root.querySelector<HTMLInputElement>("#k-slider")!;
    slider.value = "12";
    slider.dispatchEvent(new Event("input"));
    await flush();
    expect(handles.session.entries.length).toBe(before + 1);
    expect(handles.session.latest?.request.k).toBe(12);
  });

  it("shows inline token diagnostics for all-OOV queries", async () => {
    const input = root.querySelector<HTMLInputElement>("#text-input")!;
    input.value = "zzzz";
    input.dispatchEvent(new Event("change"));
    root.querySelector<HTMLButtonElement>("#search-button")!.click();
    await flush();
    const tokens = [...root.querySelectorAll("#diagnostics .oov-token")].map(
      (t) => t.textContent,
    );
    expect(tokens).toEqual(["zzzz"]);
  });

  it("shows a retry banner when the API is unreachable", async () => {
    document.body.innerHTML = "<div id='down'></div>";
    const down = document.getElementById("down")!;
    const api = createApiClient({
      baseUrl: "http://down",
      fetchImpl: async () => {
        throw new TypeError("fetch failed");
      },
    });
    setupConsole(down, api);
    await flush();
    expect(down.querySelector(".retry-banner")).not.toBeNull();
  });
});
