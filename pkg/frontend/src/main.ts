/** Browser entry point: read config from the URL and start the session. */

import { boot } from "./app.js";

function annotatorIdFromUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const fromUrl = params.get("annotator");
  if (fromUrl) {
    window.localStorage.setItem("arena-annotator-id", fromUrl);
    return fromUrl;
  }
  const stored = window.localStorage.getItem("arena-annotator-id");
  if (stored) return stored;
  const entered = window.prompt("Enter your annotator id:") ?? "";
  if (entered) window.localStorage.setItem("arena-annotator-id", entered);
  return entered;
}

function main(): void {
  const root = document.getElementById("arena-root");
  if (!root) throw new Error("missing #arena-root container");
  const params = new URLSearchParams(window.location.search);
  const annotatorId = annotatorIdFromUrl();
  if (!annotatorId) {
    root.textContent = "An annotator id is required (add ?annotator=… to the URL).";
    return;
  }
  boot(root, {
    apiBase: params.get("api") ?? "",
    annotatorId,
  });
}

main();
