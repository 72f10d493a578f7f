import { Api } from "./api.js";
import { Dashboard } from "./app.js";

const root = document.getElementById("app");
if (root) {
  const wsUrl = `${location.origin.replace(/^http/, "ws")}/stream`;
  const dashboard = new Dashboard(root, {
    api: new Api(""),
    streamUrl: wsUrl,
  });
  void dashboard.start();
}
