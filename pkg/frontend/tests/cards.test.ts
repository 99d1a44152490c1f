import { beforeEach, describe, expect, it, vi } from "vitest";

import {
  clearBanner,
  createResultCard,
  renderErrorBanner,
  renderResults,
  renderStatus,
} from "../src/cards.js";
import type { ResultCard, SearchResponse } from "../src/types.js";
import { loadScriptedSearches } from "./fixture-server.js";

const SCRIPTED = loadScriptedSearches();

function sampleResponse(): SearchResponse {
  return SCRIPTED[0].response;
}

function drawingCard(): ResultCard {
  for (const entry of SCRIPTED) {
    const hit = entry.response.results.find((c) => c.kind === "Drawing");
    if (hit) {
      return hit;
    }
  }
  throw new Error("fixture has no drawing card");
}

function documentCard(): ResultCard {
  for (const entry of SCRIPTED) {
    const hit = entry.response.results.find((c) => c.kind === "Document");
    if (hit) {
      return hit;
    }
  }
  throw new Error("fixture has no document card");
}

let container: HTMLElement;

beforeEach(() => {
  container = document.createElement("div");
  document.body.replaceChildren(container);
});

describe("createResultCard", () => {
  it("renders rank, kind tag, and title from the card", () => {
    const card = drawingCard();
    const el = createResultCard(card);
    expect(el.querySelector(".rank")?.textContent).toBe(`#${card.rank}`);
    expect(el.querySelector(".kind-tag")?.textContent).toBe("Drawing");
    expect(el.querySelector(".title")?.textContent).toBe(card.title);
    expect(el.dataset.docId).toBe(card.doc_id);
  });

  it("styles the kind tag by kind exactly", () => {
    const drawing = createResultCard(drawingCard());
    const doc = createResultCard(documentCard());
    expect(drawing.querySelector(".kind-tag")?.classList.contains("kind-drawing")).toBe(true);
    expect(drawing.querySelector(".kind-tag")?.classList.contains("kind-document")).toBe(false);
    expect(doc.querySelector(".kind-tag")?.classList.contains("kind-document")).toBe(true);
    expect(doc.querySelector(".kind-tag")?.classList.contains("kind-drawing")).toBe(false);
  });

  it("shows drawing metadata chips", () => {
    const card = drawingCard();
    const el = createResultCard(card);
    const chips = [...el.querySelectorAll(".chip")].map((c) => c.textContent);
    expect(chips).toContain(`dwg${card.drawing_number}`);
    expect(chips).toContain(`rev${card.revision}`);
    expect(chips).toContain(`facility${card.facility}`);
  });

  it("shows the doc class chip on document cards", () => {
    const card = documentCard();
    const el = createResultCard(card);
    const chips = [...el.querySelectorAll(".chip")].map((c) => c.textContent);
    expect(chips).toContain(`class${card.doc_class}`);
    expect(el.querySelector(".thumb")).not.toBeNull();
  });

  it("uses the thumbnail reference verbatim", () => {
    const card = drawingCard();
    const el = createResultCard(card);
    const img = el.querySelector<HTMLImageElement>("img.thumb");
    expect(img?.getAttribute("src")).toBe(card.thumbnail_ref);
  });

  it("renders a placeholder when the thumbnail is missing", () => {
    const card = { ...drawingCard(), thumbnail_ref: null };
    const el = createResultCard(card);
    expect(el.querySelector("img.thumb")).toBeNull();
    expect(el.querySelector(".thumb-missing")).not.toBeNull();
  });

  it("reveals the score decomposition only on demand", () => {
    const card = drawingCard();
    const el = createResultCard(card);
    document.body.appendChild(el);
    const toggle = el.querySelector<HTMLButtonElement>(".score-toggle");
    const panel = el.querySelector<HTMLElement>(".score-panel");
    expect(toggle?.textContent).toBe(`score ${card.score.s_final.toFixed(3)}`);
    expect(panel?.hidden).toBe(true);
    toggle?.click();
    expect(panel?.hidden).toBe(false);
    expect(panel?.textContent).toContain(card.score.s_lambda.toFixed(3));
    toggle?.click();
    expect(panel?.hidden).toBe(true);
  });

  it("treats titles as text, not markup", () => {
    const card = { ...drawingCard(), title: "<img src=x onerror=boom>" };
    const el = createResultCard(card);
    expect(el.querySelector(".title img")).toBeNull();
    expect(el.querySelector(".title")?.textContent).toBe("<img src=x onerror=boom>");
  });
});

describe("renderResults", () => {
  it("renders cards in response order", () => {
    const response = sampleResponse();
    renderResults(container, response);
    const ids = [...container.querySelectorAll(".result-card")].map(
      (el) => (el as HTMLElement).dataset.docId,
    );
    expect(ids).toEqual(response.results.map((c) => c.doc_id));
  });

  it("replaces earlier results entirely", () => {
    renderResults(container, sampleResponse());
    renderResults(container, SCRIPTED[1].response);
    const ids = [...container.querySelectorAll(".result-card")].map(
      (el) => (el as HTMLElement).dataset.docId,
    );
    expect(ids).toEqual(SCRIPTED[1].response.results.map((c) => c.doc_id));
  });

  it("shows an empty state for zero results", () => {
    const response = { ...sampleResponse(), results: [] };
    renderResults(container, response);
    expect(container.querySelectorAll(".result-card").length).toBe(0);
    expect(container.querySelector(".empty-state")).not.toBeNull();
  });
});

describe("renderStatus", () => {
  it("summarizes count and pool and hides stage timings by default", () => {
    const response = sampleResponse();
    renderStatus(container, response);
    const summary = container.querySelector(".status-summary");
    expect(summary?.textContent).toContain(`${response.results.length} results`);
    expect(summary?.textContent).toContain(`pool ${response.pool_size}`);
    const panel = container.querySelector<HTMLElement>(".timing-panel");
    expect(panel?.hidden).toBe(true);
    container.querySelector<HTMLButtonElement>(".timing-toggle")?.click();
    expect(panel?.hidden).toBe(false);
    for (const stage of Object.keys(response.timings_ms)) {
      expect(panel?.textContent).toContain(stage);
    }
  });
});

describe("renderErrorBanner", () => {
  it("shows the message and wires the retry button", () => {
    const retry = vi.fn();
    renderErrorBanner(container, "search service unreachable", retry);
    const banner = container.querySelector(".error-banner");
    expect(banner?.getAttribute("role")).toBe("alert");
    expect(banner?.querySelector(".error-message")?.textContent).toBe(
      "search service unreachable",
    );
    banner?.querySelector<HTMLButtonElement>(".retry")?.click();
    expect(retry).toHaveBeenCalledTimes(1);
    clearBanner(container);
    expect(container.querySelector(".error-banner")).toBeNull();
  });
});
