import type { SearchRequest, SearchResponse, Strategy } from "./types.js";

export interface HistoryEntry {
  seq: number;
  request: SearchRequest;
  response: SearchResponse;
}

/**
 * Query session state: the current controls, plus an append-only history
 * of completed (request, response) pairs. Responses that arrive after a
 * newer request was issued are discarded, so the rendered results always
 * correspond to the latest response.
 */
export class QuerySession {
  roomId: string | null = null;
  textQuery = "";
  k = 6;
  strategy: Strategy = "feature_similarity";

  private seq = 0;
  private history: HistoryEntry[] = [];

  /** Stamp an outgoing request; the stamp decides staleness on completion. */
  issue(): { seq: number; request: SearchRequest } {
    const request: SearchRequest = { k: this.k, strategy: this.strategy };
    if (this.roomId !== null) {
      request.room_id = this.roomId;
    }
    if (this.textQuery.trim() !== "") {
      request.text_query = this.textQuery.trim();
    }
    this.seq += 1;
    return { seq: this.seq, request };
  }

  /** Record a completed search; returns false for stale responses. */
  complete(seq: number, request: SearchRequest, response: SearchResponse): boolean {
    if (seq !== this.seq) {
      return false;
    }
    this.history.push({ seq, request, response });
    return true;
  }

  get latest(): HistoryEntry | null {
    return this.history.length > 0 ? this.history[this.history.length - 1] : null;
  }

  /** The entry shown beside the latest one for comparison. */
  get previous(): HistoryEntry | null {
    return this.history.length > 1 ? this.history[this.history.length - 2] : null;
  }

  get entries(): readonly HistoryEntry[] {
    return this.history;
  }

  hasModality(): boolean {
    return this.roomId !== null || this.textQuery.trim() !== "";
  }
}
