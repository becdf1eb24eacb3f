import { ApiError, createApiClient, type ApiClient } from "./api.js";
import {
  categoryOptions,
  renderDetectionOverlay,
  renderOovDiagnostics,
  renderResults,
  renderRetryBanner,
  renderRoomGrid,
} from "./render.js";
import { QuerySession } from "./session.js";
import type { RoomSummary, Strategy } from "./types.js";

interface ConsoleElements {
  picker: HTMLElement;
  overlay: HTMLElement;
  results: HTMLElement;
  diagnostics: HTMLElement;
  textInput: HTMLInputElement;
  kSlider: HTMLInputElement;
  kValue: HTMLElement;
  strategyToggle: HTMLSelectElement;
  searchButton: HTMLButtonElement;
  categoryFilter: HTMLSelectElement;
}

export function setupConsole(root: HTMLElement, api: ApiClient) {
  root.innerHTML = `
    <header><h1>stylesearch console</h1></header>
    <div id="banner"></div>
    <section class="controls">
      <select id="category-filter"><option value="">all categories</option></select>
      <input id="text-input" type="text" placeholder="text query, e.g. white modern" />
      <label>k <input id="k-slider" type="range" min="1" max="20" value="6" />
        <span id="k-value">6</span></label>
      <select id="strategy-toggle">
        <option value="feature_similarity">feature similarity</option>
        <option value="simple">simple</option>
      </select>
      <button id="search-button">Search</button>
    </section>
    <div id="diagnostics"></div>
    <section id="picker"></section>
    <section id="overlay"></section>
    <section id="results"></section>
  `;

  const els: ConsoleElements = {
    picker: root.querySelector("#picker")!,
    overlay: root.querySelector("#overlay")!,
    results: root.querySelector("#results")!,
    diagnostics: root.querySelector("#diagnostics")!,
    textInput: root.querySelector("#text-input")!,
    kSlider: root.querySelector("#k-slider")!,
    kValue: root.querySelector("#k-value")!,
    strategyToggle: root.querySelector("#strategy-toggle")!,
    searchButton: root.querySelector("#search-button")!,
    categoryFilter: root.querySelector("#category-filter")!,
  };

  const session = new QuerySession();
  let rooms: RoomSummary[] = [];
  let category: string | null = null;

  function redrawPicker() {
    els.picker.replaceChildren(renderRoomGrid(rooms, category, selectRoom));
  }

  function redrawResults() {
    els.results.replaceChildren(renderResults(session.latest, session.previous));
  }

  async function selectRoom(id: string) {
    session.roomId = id;
    const detail = await api.room(id);
    els.overlay.replaceChildren(renderDetectionOverlay(detail));
    await runSearch();
  }

  async function runSearch() {
    if (!session.hasModality()) {
      return;
    }
    els.diagnostics.replaceChildren();
    const { seq, request } = session.issue();
    try {
      const response = await api.search(request);
      if (session.complete(seq, request, response)) {
        redrawResults();
      }
    } catch (err) {
      if (err instanceof ApiError && err.detail.code === "all_oov") {
        els.diagnostics.replaceChildren(renderOovDiagnostics(err.detail));
        return;
      }
      throw err;
    }
  }

  async function loadRooms() {
    const banner = root.querySelector("#banner")!;
    banner.replaceChildren();
    try {
      rooms = await api.rooms();
    } catch {
      banner.replaceChildren(
        renderRetryBanner("API unreachable.", () => void loadRooms()),
      );
      return;
    }
    for (const cat of categoryOptions(rooms)) {
      const option = document.createElement("option");
      option.value = cat;
      option.textContent = cat;
      els.categoryFilter.appendChild(option);
    }
    redrawPicker();
  }

  els.categoryFilter.addEventListener("change", () => {
    category = els.categoryFilter.value || null;
    redrawPicker();
  });
  els.textInput.addEventListener("change", () => {
    session.textQuery = els.textInput.value;
  });
  els.kSlider.addEventListener("input", () => {
    session.k = Number(els.kSlider.value);
    els.kValue.textContent = els.kSlider.value;
    void runSearch();
  });
  els.strategyToggle.addEventListener("change", () => {
    session.strategy = els.strategyToggle.value as Strategy;
    void runSearch();
  });
  els.searchButton.addEventListener("click", () => {
    session.textQuery = els.textInput.value;
    void runSearch();
  });

  void loadRooms();
  return { session, selectRoom, runSearch, loadRooms };
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const params = new URLSearchParams(window.location.search);
  const api = createApiClient({ baseUrl: params.get("api") ?? "http://127.0.0.1:8000" });
  setupConsole(document.getElementById("app")!, api);
}
