import type { HistoryEntry } from "./session.js";
import type {
  ApiErrorDetail,
  DetectionBox,
  ResultGroup,
  RoomDetail,
  RoomSummary,
} from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

/** Scores are shown verbatim: same JSON serialization as the API payload. */
export function formatScore(score: number): string {
  return JSON.stringify(score);
}

export function renderRoomGrid(
  rooms: RoomSummary[],
  category: string | null,
  onSelect: (id: string) => void,
): HTMLElement {
  const grid = el("div", "room-grid");
  const shown = category === null ? rooms : rooms.filter((r) => r.category === category);
  if (shown.length === 0) {
    grid.appendChild(el("p", "empty-state", "No rooms available."));
    return grid;
  }
  for (const room of shown) {
    const card = el("button", "room-card");
    card.dataset.roomId = room.id;
    card.appendChild(el("div", "room-card-id", room.id));
    card.appendChild(el("div", "room-card-category", room.category));
    card.appendChild(el("div", "room-card-count", `${room.detections} detections`));
    card.addEventListener("click", () => onSelect(room.id));
    grid.appendChild(card);
  }
  return grid;
}

export function categoryOptions(rooms: RoomSummary[]): string[] {
  return [...new Set(rooms.map((r) => r.category))].sort();
}

function boxLabel(det: DetectionBox): string {
  return `${det.class_label} ${det.confidence.toFixed(2)}`;
}

/** One labeled box per kept detection, drawn over the room image area. */
export function renderDetectionOverlay(room: RoomDetail): SVGSVGElement {
  const boxes = room.kept_detections;
  const maxX = Math.max(100, ...boxes.map((d) => d.x + d.width));
  const maxY = Math.max(100, ...boxes.map((d) => d.y + d.height));
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "detection-overlay");
  svg.setAttribute("viewBox", `0 0 ${maxX} ${maxY}`);
  for (const det of boxes) {
    const group = document.createElementNS(SVG_NS, "g");
    group.setAttribute("class", "detection-box");
    const rect = document.createElementNS(SVG_NS, "rect");
    rect.setAttribute("x", String(det.x));
    rect.setAttribute("y", String(det.y));
    rect.setAttribute("width", String(det.width));
    rect.setAttribute("height", String(det.height));
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(det.x));
    label.setAttribute("y", String(Math.max(det.y - 4, 10)));
    label.textContent = boxLabel(det);
    group.appendChild(rect);
    group.appendChild(label);
    svg.appendChild(group);
  }
  return svg;
}

function renderGroup(group: ResultGroup): HTMLElement {
  const wrap = el("div", "result-group");
  const header = el("div", "result-group-header");
  header.appendChild(
    el("span", "group-title",
       group.detection ? boxLabel(group.detection) : "text query"),
  );
  if (group.fallback) {
    header.appendChild(el("span", "chip chip-fallback", "class fallback"));
  }
  wrap.appendChild(header);
  for (const card of group.results) {
    const node = el("div", "result-card");
    node.dataset.itemId = card.item_id;
    node.appendChild(el("div", "card-name", card.name || card.item_id));
    node.appendChild(el("span", "card-class", card.class_label));
    node.appendChild(el("span", `badge badge-${card.modality}`, card.modality));
    node.appendChild(el("span", "card-score", formatScore(card.score)));
    wrap.appendChild(node);
  }
  if (group.results.length === 0) {
    wrap.appendChild(el("p", "empty-state", "No results."));
  }
  return wrap;
}

export function renderResultColumn(entry: HistoryEntry): HTMLElement {
  const column = el("div", "result-column");
  column.dataset.strategy = entry.request.strategy;
  column.appendChild(
    el("h3", "column-title", `${entry.request.strategy} (k=${entry.request.k})`),
  );
  for (const notice of entry.response.notices) {
    column.appendChild(el("div", "notice", notice));
  }
  for (const group of entry.response.groups) {
    column.appendChild(renderGroup(group));
  }
  return column;
}

/** Latest response on the left, the superseded one beside it for comparison. */
export function renderResults(
  latest: HistoryEntry | null,
  previous: HistoryEntry | null,
): HTMLElement {
  const wrap = el("div", "results");
  if (latest === null) {
    wrap.appendChild(el("p", "empty-state", "Run a search to see results."));
    return wrap;
  }
  wrap.appendChild(renderResultColumn(latest));
  if (previous !== null) {
    wrap.appendChild(renderResultColumn(previous));
  }
  return wrap;
}

export function renderOovDiagnostics(detail: ApiErrorDetail): HTMLElement {
  const box = el("div", "oov-diagnostics");
  box.appendChild(el("span", undefined, "Unknown words: "));
  for (const token of detail.oov_tokens ?? []) {
    box.appendChild(el("code", "oov-token", token));
  }
  return box;
}

export function renderRetryBanner(message: string, onRetry: () => void): HTMLElement {
  const banner = el("div", "retry-banner");
  banner.appendChild(el("span", undefined, message));
  const button = el("button", "retry-button", "Retry");
  button.addEventListener("click", onRetry);
  banner.appendChild(button);
  return banner;
}
