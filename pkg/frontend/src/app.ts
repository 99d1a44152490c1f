import { isAbortError, ApiError, SearchClient } from "./api.js";
import { buildRequest } from "./facets.js";
import {
  clearBanner,
  renderErrorBanner,
  renderResults,
  renderStatus,
} from "./cards.js";
import { decodeState, encodeState, type ConsoleState } from "./url-state.js";
import type { FacetState } from "./types.js";

export type ConsoleOptions = {
  /** location.search (or any query string) to restore state from. */
  initialSearch?: string;
  k?: number;
  /** Called with the encoded query string after every submission. */
  onStateChange?: (queryString: string) => void;
};

export type ConsoleHandle = {
  submit: () => Promise<void>;
  state: () => ConsoleState;
  /** Resolves once any search restored from the initial URL has settled. */
  ready: Promise<void>;
  elements: {
    form: HTMLFormElement;
    input: HTMLInputElement;
    submitButton: HTMLButtonElement;
    typeSelect: HTMLSelectElement;
    facilityInput: HTMLInputElement;
    revisionInput: HTMLInputElement;
    revisionModeSelect: HTMLSelectElement;
    banner: HTMLElement;
    status: HTMLElement;
    results: HTMLElement;
  };
};

function buildSkeleton(root: HTMLElement): ConsoleHandle["elements"] {
  root.replaceChildren();
  const form = document.createElement("form");
  form.className = "search-form";
  const input = document.createElement("input");
  input.type = "search";
  input.className = "query-input";
  input.placeholder = "Search drawings and documents";
  input.setAttribute("aria-label", "Search query");
  const submitButton = document.createElement("button");
  submitButton.type = "submit";
  submitButton.className = "submit";
  submitButton.textContent = "Search";
  submitButton.disabled = true;
  form.append(input, submitButton);

  const facets = document.createElement("fieldset");
  facets.className = "facets";
  const typeSelect = document.createElement("select");
  typeSelect.className = "facet-type";
  for (const [value, label] of [
    ["any", "All types"],
    ["drawing", "Drawings only"],
    ["document", "Documents only"],
  ] as [string, string][]) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = label;
    typeSelect.appendChild(option);
  }
  const facilityInput = document.createElement("input");
  facilityInput.type = "text";
  facilityInput.className = "facet-facility";
  facilityInput.placeholder = "e.g. R8E8700";
  const revisionInput = document.createElement("input");
  revisionInput.type = "text";
  revisionInput.className = "facet-revision";
  revisionInput.placeholder = "e.g. B or A,B";
  const revisionModeSelect = document.createElement("select");
  revisionModeSelect.className = "facet-revmode";
  for (const value of ["require", "exclude"]) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = value;
    revisionModeSelect.appendChild(option);
  }
  for (const [label, control] of [
    ["Type", typeSelect],
    ["Facility", facilityInput],
    ["Revision", revisionInput],
    ["Revision mode", revisionModeSelect],
  ] as [string, HTMLElement][]) {
    const wrap = document.createElement("label");
    wrap.className = "facet";
    const span = document.createElement("span");
    span.textContent = label;
    wrap.append(span, control);
    facets.appendChild(wrap);
  }

  const banner = document.createElement("div");
  banner.className = "banner-slot";
  const status = document.createElement("div");
  status.className = "status-slot";
  const results = document.createElement("div");
  results.className = "results";

  root.append(form, facets, banner, status, results);
  return {
    form,
    input,
    submitButton,
    typeSelect,
    facilityInput,
    revisionInput,
    revisionModeSelect,
    banner,
    status,
    results,
  };
}

export function initConsole(
  root: HTMLElement,
  client: SearchClient,
  options: ConsoleOptions = {},
): ConsoleHandle {
  const k = options.k ?? 10;
  const elements = buildSkeleton(root);
  let sequence = 0;

  const readFacets = (): FacetState => ({
    type: elements.typeSelect.value as FacetState["type"],
    facility: elements.facilityInput.value,
    revision: elements.revisionInput.value,
    revisionMode:
      elements.revisionModeSelect.value === "exclude" ? "exclude" : "require",
  });

  const state = (): ConsoleState => ({
    query: elements.input.value,
    facets: readFacets(),
  });

  const applyState = (restored: ConsoleState): void => {
    elements.input.value = restored.query;
    elements.typeSelect.value = restored.facets.type;
    elements.facilityInput.value = restored.facets.facility;
    elements.revisionInput.value = restored.facets.revision;
    elements.revisionModeSelect.value = restored.facets.revisionMode;
    elements.submitButton.disabled = restored.query.trim() === "";
  };

  const submit = async (): Promise<void> => {
    const current = state();
    const query = current.query.trim();
    if (!query) {
      return;
    }
    const requestId = ++sequence;
    options.onStateChange?.(encodeState(current));
    try {
      const response = await client.search(buildRequest(query, current.facets, k));
      if (requestId !== sequence) {
        return;
      }
      clearBanner(elements.banner);
      renderStatus(elements.status, response);
      renderResults(elements.results, response);
    } catch (error) {
      if (isAbortError(error) || requestId !== sequence) {
        return;
      }
      const message =
        error instanceof ApiError ? error.message : "search failed";
      renderErrorBanner(elements.banner, message, () => {
        void submit();
      });
    }
  };

  elements.input.addEventListener("input", () => {
    elements.submitButton.disabled = elements.input.value.trim() === "";
  });
  elements.form.addEventListener("submit", (event) => {
    event.preventDefault();
    void submit();
  });

  applyState(decodeState(options.initialSearch ?? ""));
  const ready =
    elements.input.value.trim() === "" ? Promise.resolve() : submit();

  return { submit, state, ready, elements };
}
