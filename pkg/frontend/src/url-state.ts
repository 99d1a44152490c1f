/**
 * Console state lives in the URL query string so any search is a
 * shareable link: q (query text), type, facility, rev, revmode.
 * Defaults are omitted, so a blank console is just the bare path.
 */

import { DEFAULT_FACETS } from "./facets.js";
import type { FacetState } from "./types.js";

export type ConsoleState = {
  query: string;
  facets: FacetState;
};

export const EMPTY_STATE: ConsoleState = {
  query: "",
  facets: DEFAULT_FACETS,
};

export function encodeState(state: ConsoleState): string {
  const params = new URLSearchParams();
  if (state.query.trim()) {
    params.set("q", state.query.trim());
  }
  if (state.facets.type !== "any") {
    params.set("type", state.facets.type);
  }
  const facility = state.facets.facility.trim();
  if (facility) {
    params.set("facility", facility);
  }
  const revision = state.facets.revision.trim();
  if (revision) {
    params.set("rev", revision);
    if (state.facets.revisionMode !== "require") {
      params.set("revmode", state.facets.revisionMode);
    }
  }
  return params.toString();
}

export function decodeState(search: string): ConsoleState {
  const params = new URLSearchParams(search);
  const type = params.get("type");
  return {
    query: params.get("q") ?? "",
    facets: {
      type: type === "drawing" || type === "document" ? type : "any",
      facility: params.get("facility") ?? "",
      revision: params.get("rev") ?? "",
      revisionMode: params.get("revmode") === "exclude" ? "exclude" : "require",
    },
  };
}
