import type { FacetState, SearchRequest } from "./types.js";

export const DEFAULT_FACETS: FacetState = {
  type: "any",
  facility: "",
  revision: "",
  revisionMode: "require",
};

/**
 * Translate the facet panel into a search request.
 *
 * The type facet sends both allowed_types (steers scoring) and
 * filter_kinds (guarantees the page only shows that kind). Facility
 * and revision go through the slots override so the query text the
 * user typed is never rewritten client-side.
 */
export function buildRequest(
  query: string,
  facets: FacetState,
  k: number,
): SearchRequest {
  const request: SearchRequest = { query, k };
  if (facets.type === "drawing") {
    request.allowed_types = ["Drawing"];
    request.filter_kinds = ["Drawing"];
  } else if (facets.type === "document") {
    request.allowed_types = ["Policy", "Procedure"];
    request.filter_kinds = ["Document"];
  }
  const slots: NonNullable<SearchRequest["slots"]> = {};
  const facility = facets.facility.trim();
  if (facility) {
    slots.facility = facility;
  }
  const revision = facets.revision.trim();
  if (revision) {
    const values = revision
      .split(",")
      .map((v) => v.trim())
      .filter((v) => v.length > 0);
    if (values.length > 0) {
      slots.revision = { values, polarity: facets.revisionMode };
    }
  }
  if (slots.facility !== undefined || slots.revision !== undefined) {
    request.slots = slots;
  }
  return request;
}
