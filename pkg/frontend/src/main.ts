import { StudioApp } from "./app.js";

const app = new StudioApp(document);
if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", () => app.start());
} else {
  app.start();
}
