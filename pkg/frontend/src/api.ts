import type {
  ApiErrorDetail,
  RoomDetail,
  RoomSummary,
  SearchRequest,
  SearchResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: ApiErrorDetail,
  ) {
    super(detail.message);
  }
}

export interface ApiClientOptions {
  baseUrl?: string;
  fetchImpl?: typeof fetch;
}

async function parseError(response: Response): Promise<never> {
  let detail: ApiErrorDetail = { code: "http_error", message: `HTTP ${response.status}` };
  try {
    const payload = (await response.json()) as { detail?: ApiErrorDetail };
    if (payload.detail && typeof payload.detail === "object") {
      detail = payload.detail;
    }
  } catch {
    // non-JSON error body; keep the generic detail
  }
  throw new ApiError(response.status, detail);
}

export function createApiClient(options: ApiClientOptions = {}) {
  const baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
  const fetchImpl = options.fetchImpl ?? fetch;

  async function getJson<T>(path: string): Promise<T> {
    const response = await fetchImpl(`${baseUrl}${path}`);
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  return {
    rooms(): Promise<RoomSummary[]> {
      return getJson<RoomSummary[]>("/rooms");
    },

    room(id: string): Promise<RoomDetail> {
      return getJson<RoomDetail>(`/rooms/${encodeURIComponent(id)}`);
    },

    async search(request: SearchRequest): Promise<SearchResponse> {
      const response = await fetchImpl(`${baseUrl}/search`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(request),
      });
      if (!response.ok) {
        await parseError(response);
      }
      return (await response.json()) as SearchResponse;
    },

    mediaUrl(ref: string): string {
      return `${baseUrl}/media/${ref.replace(/^\//, "")}`;
    },
  };
}

export type ApiClient = ReturnType<typeof createApiClient>;
