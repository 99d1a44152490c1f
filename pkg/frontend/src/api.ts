import type { SearchRequest, SearchResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export function isAbortError(error: unknown): boolean {
  return error instanceof Error && error.name === "AbortError";
}

type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

export class SearchClient {
  private controller: AbortController | null = null;
  private readonly baseUrl: string;
  private readonly fetchFn: FetchFn;

  constructor(baseUrl: string, fetchFn?: FetchFn) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  /**
   * POST /v1/search, aborting any request still in flight; only the
   * newest submission ever resolves with a response.
   */
  async search(request: SearchRequest): Promise<SearchResponse> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}/v1/search`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(request),
        signal: controller.signal,
      });
    } catch (error) {
      if (isAbortError(error)) {
        throw error;
      }
      throw new ApiError("search service unreachable", null);
    }
    if (!response.ok) {
      throw new ApiError(await errorDetail(response), response.status);
    }
    return (await response.json()) as SearchResponse;
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body: unknown = await response.json();
    if (
      typeof body === "object" &&
      body !== null &&
      typeof (body as { error?: unknown }).error === "string"
    ) {
      return (body as { error: string }).error;
    }
  } catch {
    // fall through to the generic message
  }
  return `search failed with status ${response.status}`;
}
