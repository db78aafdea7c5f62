import { startApp } from "./app.js";

const root = document.getElementById("app");
if (root) {
  // served by the review service itself, so same-origin
  void startApp({ root, baseUrl: "" });
}
