import type { ResultCard, ScoreBreakdown, SearchResponse } from "./types.js";

const SCORE_ROWS: [keyof ScoreBreakdown, string][] = [
  ["s_final", "final"],
  ["s_lambda", "fused"],
  ["s_sparse", "lexical"],
  ["s_dense", "vector"],
  ["match_region", "region match"],
  ["consistency_rev", "revision consistency"],
  ["off_type", "off type"],
];

function chip(label: string, value: string): HTMLElement {
  const el = document.createElement("span");
  el.className = "chip";
  const name = document.createElement("span");
  name.className = "chip-label";
  name.textContent = label;
  const val = document.createElement("span");
  val.className = "chip-value";
  val.textContent = value;
  el.append(name, val);
  return el;
}

function thumbnail(card: ResultCard): HTMLElement {
  if (card.thumbnail_ref) {
    const img = document.createElement("img");
    img.className = "thumb";
    img.src = card.thumbnail_ref;
    img.alt = `${card.doc_id} preview`;
    return img;
  }
  const placeholder = document.createElement("div");
  placeholder.className = "thumb thumb-missing";
  placeholder.textContent = "no preview";
  return placeholder;
}

function scorePanel(score: ScoreBreakdown): HTMLElement {
  const panel = document.createElement("dl");
  panel.className = "score-panel";
  panel.hidden = true;
  for (const [key, label] of SCORE_ROWS) {
    const dt = document.createElement("dt");
    dt.textContent = label;
    const dd = document.createElement("dd");
    dd.textContent = (score[key] as number).toFixed(3);
    panel.append(dt, dd);
  }
  return panel;
}

export function createResultCard(card: ResultCard): HTMLElement {
  const article = document.createElement("article");
  article.className = "result-card";
  article.dataset.docId = card.doc_id;
  article.dataset.kind = card.kind;

  const header = document.createElement("header");
  header.className = "card-header";
  const rank = document.createElement("span");
  rank.className = "rank";
  rank.textContent = `#${card.rank}`;
  const tag = document.createElement("span");
  tag.className =
    card.kind === "Drawing" ? "kind-tag kind-drawing" : "kind-tag kind-document";
  tag.textContent = card.kind;
  const title = document.createElement("h3");
  title.className = "title";
  title.textContent = card.title;
  header.append(rank, tag, title);

  const body = document.createElement("div");
  body.className = "card-body";
  body.appendChild(thumbnail(card));

  const detail = document.createElement("div");
  detail.className = "card-detail";
  const chips = document.createElement("div");
  chips.className = "chips";
  if (card.drawing_number) {
    chips.appendChild(chip("dwg", card.drawing_number));
  }
  if (card.revision) {
    chips.appendChild(chip("rev", card.revision));
  }
  if (card.facility) {
    chips.appendChild(chip("facility", card.facility));
  }
  if (card.doc_class) {
    chips.appendChild(chip("class", card.doc_class));
  }
  detail.appendChild(chips);

  const snippet = document.createElement("p");
  snippet.className = "snippet";
  snippet.textContent = card.snippet;
  detail.appendChild(snippet);

  const footer = document.createElement("footer");
  footer.className = "card-footer";
  const toggle = document.createElement("button");
  toggle.type = "button";
  toggle.className = "score-toggle";
  toggle.textContent = `score ${card.score.s_final.toFixed(3)}`;
  toggle.setAttribute("aria-expanded", "false");
  const panel = scorePanel(card.score);
  toggle.addEventListener("click", () => {
    panel.hidden = !panel.hidden;
    toggle.setAttribute("aria-expanded", panel.hidden ? "false" : "true");
  });
  footer.append(toggle, panel);
  detail.appendChild(footer);

  body.appendChild(detail);
  article.append(header, body);
  return article;
}

/** Render cards strictly in response order; the list is never resorted. */
export function renderResults(
  container: HTMLElement,
  response: SearchResponse,
): void {
  container.replaceChildren();
  if (response.results.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No results.";
    container.appendChild(empty);
    return;
  }
  for (const card of response.results) {
    container.appendChild(createResultCard(card));
  }
}

export function renderStatus(
  container: HTMLElement,
  response: SearchResponse,
): void {
  container.replaceChildren();
  const line = document.createElement("div");
  line.className = "status-summary";
  const total = Object.values(response.timings_ms).reduce((a, b) => a + b, 0);
  line.textContent =
    `${response.results.length} results · pool ${response.pool_size} · ` +
    `${total.toFixed(1)} ms`;
  const toggle = document.createElement("button");
  toggle.type = "button";
  toggle.className = "timing-toggle";
  toggle.textContent = "stages";
  toggle.setAttribute("aria-expanded", "false");
  const panel = document.createElement("dl");
  panel.className = "timing-panel";
  panel.hidden = true;
  for (const [stage, ms] of Object.entries(response.timings_ms)) {
    const dt = document.createElement("dt");
    dt.textContent = stage;
    const dd = document.createElement("dd");
    dd.textContent = `${ms.toFixed(1)} ms`;
    panel.append(dt, dd);
  }
  toggle.addEventListener("click", () => {
    panel.hidden = !panel.hidden;
    toggle.setAttribute("aria-expanded", panel.hidden ? "false" : "true");
  });
  line.appendChild(toggle);
  container.append(line, panel);
}

export function renderErrorBanner(
  container: HTMLElement,
  message: string,
  onRetry: () => void,
): void {
  container.replaceChildren();
  const banner = document.createElement("div");
  banner.className = "error-banner";
  banner.setAttribute("role", "alert");
  const text = document.createElement("span");
  text.className = "error-message";
  text.textContent = message;
  const retry = document.createElement("button");
  retry.type = "button";
  retry.className = "retry";
  retry.textContent = "Retry";
  retry.addEventListener("click", onRetry);
  banner.append(text, retry);
  container.appendChild(banner);
}

export function clearBanner(container: HTMLElement): void {
  container.replaceChildren();
}
