/** Shapes of the /v1/search contract (see docs/http-api.md in the repo root). */

export type Kind = "Drawing" | "Document";

export type ScoreBreakdown = {
  doc_id: string;
  s_sparse: number;
  s_dense: number;
  z_sparse: number;
  z_dense: number;
  s_lambda: number;
  match_region: number;
  consistency_rev: number;
  off_type: number;
  s_final: number;
};

export type ResultCard = {
  rank: number;
  doc_id: string;
  kind: Kind;
  title: string;
  snippet: string;
  thumbnail_ref: string | null;
  date: string | null;
  score: ScoreBreakdown;
  drawing_number?: string | null;
  revision?: string | null;
  facility?: string | null;
  size_code?: string | null;
  sheet?: [number, number] | null;
  doc_class?: string | null;
};

export type QueryEcho = {
  raw_text: string;
  normalized_text: string;
  rewritten_text: string;
  facility: string | null;
  asset_part: string | null;
  allowed_types: string[] | null;
  constraints: { kind: string; value: string; polarity: string }[];
};

export type SearchResponse = {
  query: QueryEcho;
  results: ResultCard[];
  timings_ms: Record<string, number>;
  pool_size: number;
};

export type RevisionMode = "require" | "exclude";

export type SearchRequest = {
  query: string;
  k?: number;
  allowed_types?: string[];
  filter_kinds?: Kind[];
  slots?: {
    facility?: string;
    revision?: { values: string[]; polarity: RevisionMode };
  };
};

/** State of the facet panel; "any" leaves the type slot to the query text. */
export type FacetState = {
  type: "any" | "drawing" | "document";
  facility: string;
  revision: string;
  revisionMode: RevisionMode;
};
