import { SearchClient } from "./api.js";
import { initConsole } from "./app.js";

declare global {
  interface Window {
    __ENGSEARCH_API__?: string;
  }
}

document.addEventListener("DOMContentLoaded", () => {
  const root = document.querySelector<HTMLElement>("#console");
  if (!root) {
    console.error("console failed to initialize: #console missing");
    return;
  }
  const base = window.__ENGSEARCH_API__ ?? "";
  initConsole(root, new SearchClient(base), {
    initialSearch: window.location.search,
    k: 10,
    onStateChange: (queryString) => {
      const url = queryString ? `?${queryString}` : window.location.pathname;
      window.history.replaceState(null, "", url);
    },
  });
});
