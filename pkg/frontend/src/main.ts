import { ReviewApi } from "./api.js";
import { ReviewStore } from "./state.js";
import { renderApp } from "./views.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const api = new ReviewApi("", localStorage.getItem("reviewer") ?? "");
const store = new ReviewStore(api);

store.subscribe(() => renderApp(store, root));

let toastTimer: number | undefined;
store.subscribe(() => {
  if (store.toast) {
    window.clearTimeout(toastTimer);
    toastTimer = window.setTimeout(() => store.setToast(null), 4000);
  }
});

document.addEventListener("keydown", (event) => {
  if (event.target instanceof HTMLTextAreaElement || event.target instanceof HTMLInputElement) {
    return;
  }
  if (store.detail) {
    if (event.key === "Escape") store.closeDetail();
    return;
  }
  if (event.key === "j") store.moveSelection(1);
  else if (event.key === "k") store.moveSelection(-1);
  else if (event.key === "Enter") {
    const item = store.selectedItem();
    if (item) void store.openDetail(item.sample_id);
  }
});

void store.refresh().catch((err) => store.setToast(String(err)));
