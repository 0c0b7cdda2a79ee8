import { ReviewApi } from "./api.js";
import { createApp } from "./view.js";

const root = document.getElementById("app");
if (root) {
  // served from the review service's static mount; the API is same-origin
  const app = createApp(root, new ReviewApi(""));
  void app.reload();
}
