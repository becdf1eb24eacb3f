import type { RoomDetail, RoomSummary, SearchResponse } from "../src/types";

export const ROOMS: RoomSummary[] = [
  { id: "c0r0", category: "kitchen", description: ["style0", "kitchen"], image: null, detections: 3 },
  { id: "c0r1", category: "bedroom", description: ["style0", "bedroom"], image: null, detections: 2 },
  { id: "c1r0", category: "kitchen", description: ["style1", "kitchen"], image: null, detections: 4 },
];

export const ROOM_DETAIL: RoomDetail = {
  id: "c0r0",
  category: "kitchen",
  description: ["style0", "kitchen"],
  image: null,
  items: ["c0i0", "c0i1"],
  detections: [
    { class_label: "chair", x: 0, y: 10, width: 100, height: 100, confidence: 0.9 },
    { class_label: "table", x: 120, y: 10, width: 100, height: 100, confidence: 0.55 },
    { class_label: "chair", x: 10, y: 20, width: 100, height: 100, confidence: 0.05 },
  ],
  kept_detections: [
    { class_label: "chair", x: 0, y: 10, width: 100, height: 100, confidence: 0.9, source_row: 0 },
    { class_label: "table", x: 120, y: 10, width: 100, height: 100, confidence: 0.55, source_row: 1 },
  ],
};

function response(strategy: string, scores: number[]): SearchResponse {
  return {
    groups: [
      {
        detection: ROOM_DETAIL.kept_detections[0],
        fallback: false,
        results: scores.map((score, i) => ({
          item_id: `c0i${i}`,
          score,
          modality: i % 2 === 0 ? "visual" : "text",
          name: `item ${i}`,
          class_label: "chair",
          image: null,
        })),
      },
    ],
    strategy,
    k: 6,
    notices: [],
    timing: { text_ms: 0.1, total_ms: 0.4 },
  };
}

export const SEARCH_RESPONSES: Record<string, SearchResponse> = {
  feature_similarity: response("feature_similarity", [0, 0.09801714032956077, 0.7653668647301797]),
  simple: response("simple", [0, 1.4142135623730951, 0.19509032201612833]),
};

/** Minimal fixture server: a fetch implementation over canned payloads. */
export function fixtureFetch(): typeof fetch {
  return async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = String(input);
    const json = (body: unknown, status = 200) =>
      new Response(JSON.stringify(body), {
        status,
        headers: { "content-type": "application/json" },
      });
    if (url.endsWith("/rooms")) {
      return json(ROOMS);
    }
    if (url.includes("/rooms/")) {
      const id = url.slice(url.lastIndexOf("/") + 1);
      if (id !== ROOM_DETAIL.id) {
        return json({ detail: { code: "unknown_room", message: `unknown room '${id}'` } }, 404);
      }
      return json(ROOM_DETAIL);
    }
    if (url.endsWith("/search")) {
      const request = JSON.parse(String(init?.body));
      if (request.text_query === "zzzz") {
        return json(
          { detail: { code: "all_oov", message: "no known words", oov_tokens: ["zzzz"] } },
          422,
        );
      }
      return json(SEARCH_RESPONSES[request.strategy]);
    }
    return json({ detail: { code: "not_found", message: url } }, 404);
  };
}
