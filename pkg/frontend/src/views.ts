// DOM rendering. Pure functions from store snapshots to elements; all
// user actions call back into the store, which re-renders on change.

import { buildDiffCells, cellsConsistent } from "./diff.js";
import type { ReviewStore, Tab } from "./state.js";
import type { Decision, ReviewItemJson } from "./types.js";

type Child = Node | string | null | undefined;

export function el(tag: string, attrs: Record<string, string> = {}, ...children: Child[]): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    if (child === null || child === undefined) continue;
    node.append(typeof child === "string" ? document.createTextNode(child) : child);
  }
  return node;
}

const TABS: Tab[] = ["pending", "accepted", "rejected", "edited", "all"];

export function renderTabs(store: ReviewStore): HTMLElement {
  const counts = store.tabCounts();
  const nav = el("nav", { class: "tabs" });
  for (const tab of TABS) {
    const button = el(
      "button",
      { class: tab === store.tab ? "tab active" : "tab", "data-tab": tab },
      `${tab} (${counts[tab]})`,
    );
    button.addEventListener("click", () => void store.setTab(tab));
    nav.append(button);
  }
  return nav;
}

function itemCer(item: ReviewItemJson): string {
  const c = item.record.provenance.cer?.cer;
  return c === null || c === undefined ? "n/a" : c.toFixed(3);
}

export function renderQueue(store: ReviewStore): HTMLElement {
  const table = el("table", { class: "queue" });
  table.append(el(
    "tr", {},
    el("th", {}, "sample"), el("th", {}, "status"), el("th", {}, "CER"),
    el("th", {}, "spans"), el("th", {}, "machine reason"),
  ));
  store.items.forEach((item, index) => {
    const row = el(
      "tr",
      { class: index === store.selected ? "row selected" : "row", "data-id": item.sample_id },
      el("td", { class: "mono" }, item.sample_id),
      el("td", { class: `status ${item.status}` }, item.status),
      el("td", {}, itemCer(item)),
      el("td", {}, String(item.record.reasoning.decisions.length)),
      el("td", { class: "reason" }, snippet(item.machine_reason, 80)),
    );
    row.addEventListener("click", () => void store.openDetail(item.sample_id));
    table.append(row);
  });
  const pages = Math.max(1, Math.ceil(store.total / store.pageSize));
  const pager = el("div", { class: "pager" },
    button("prev", () => void store.setPage(store.page - 1), store.page <= 1),
    ` page ${store.page}/${pages} (${store.total} items) `,
    button("next", () => void store.setPage(store.page + 1), store.page >= pages),
  );
  return el("section", { class: "queue-view" }, table, pager);
}

function button(label: string, onClick: () => void, disabled = false): HTMLElement {
  const b = el("button", disabled ? { disabled: "disabled" } : {}, label);
  b.addEventListener("click", onClick);
  return b;
}

function snippet(text: string, limit: number): string {
  return text.length > limit ? text.slice(0, limit) + "…" : text;
}

function renderDiff(item: ReviewItemJson): HTMLElement {
  const prov = item.record.provenance;
  const ops = prov.cer?.ops ?? [];
  const cells = buildDiffCells(prov.aligned_hyp_primary, prov.aligned_hyp_secondary, ops);
  if (!cellsConsistent(cells, prov.aligned_hyp_primary, prov.aligned_hyp_secondary)) {
    return el("div", { class: "diff-broken" },
      "alignment unavailable", el("div", { class: "mono" }, prov.asr_hyp_primary),
      el("div", { class: "mono" }, prov.asr_hyp_secondary));
  }
  const hypRow = el("tr", {}, el("th", {}, "hyp A"));
  const refRow = el("tr", {}, el("th", {}, "hyp B"));
  for (const cell of cells) {
    hypRow.append(el("td", { class: `cell ${cell.kind}` }, cell.hyp ?? "·"));
    refRow.append(el("td", { class: `cell ${cell.kind}` }, cell.ref ?? "·"));
  }
  return el("table", { class: "diff" }, hypRow, refRow);
}

function renderSpan(decision: Decision, eliminated: [string, string][]): HTMLElement {
  const reasons = new Map(eliminated);
  const table = el("table", { class: "candidates" });
  table.append(el("tr", {},
    el("th", {}, "candidate"), el("th", {}, "lm"), el("th", {}, "ctx"),
    el("th", {}, "total"), el("th", {}, "outcome"),
  ));
  for (const cand of decision.candidates) {
    const chosen = cand.text === decision.chosen;
    table.append(el(
      "tr", { class: chosen ? "chosen" : "" },
      el("td", { class: "mono" }, cand.text),
      el("td", {}, cand.lm_logp.toFixed(3)),
      el("td", {}, cand.ctx_score.toFixed(3)),
      el("td", {}, cand.total.toFixed(3)),
      el("td", {}, chosen ? "chosen" : reasons.get(cand.text) ?? ""),
    ));
  }
  const header = el("div", { class: "span-header" },
    `chars ${decision.char_range[0]}–${decision.char_range[1]} `,
    el("span", { class: "mono" }, decision.syllables.join(" ")),
    decision.trigger ? el("span", { class: "trigger" }, ` [${decision.trigger}]`) : null,
    decision.fallback ? el("span", { class: "trigger" }, " [no candidates: kept original]") : null,
  );
  const evidence = decision.evidence.length
    ? el("div", { class: "evidence" }, "evidence: ", decision.evidence.join(", "))
    : el("div", { class: "evidence none" }, "no keyword evidence");
  return el("div", { class: "span" }, header, table, evidence);
}

export function renderDetail(store: ReviewStore): HTMLElement {
  const item = store.detail;
  if (!item) return el("div");
  const record = item.record;
  const visual = record.perception.visual;

  const editField = el("textarea", { class: "edit-field", rows: "2" }) as HTMLTextAreaElement;
  editField.value = item.edited_transcription ?? record.transcription;

  const actions = el("div", { class: "actions" },
    button("Accept", () => void store.verdict(item.sample_id, "accept")),
    button("Reject", () => void store.verdict(item.sample_id, "reject")),
    button("Save edit", () => void store.verdict(item.sample_id, "edit", editField.value)),
    button("Back", () => store.closeDetail()),
  );

  const spans = record.reasoning.decisions.map((dec, i) =>
    renderSpan(dec, record.reasoning.eliminated[i] ?? []));

  return el("section", { class: "detail" },
    el("h2", {}, item.sample_id, el("span", { class: `status ${item.status}` }, ` ${item.status}`)),
    el("h3", {}, "hypothesis diff"),
    renderDiff(item),
    el("h3", {}, "ambiguous spans"),
    ...spans,
    el("h3", {}, "visual context"),
    el("div", { class: "context" },
      el("div", { class: "ctx-subtitle" }, "subtitles (not used as evidence): ",
        visual.subtitle_text ?? "—"),
      el("div", { class: "ctx-background" }, "background text: ",
        visual.background_text.join(" | ") || "—"),
      el("div", { class: "ctx-caption" }, "caption: ", visual.caption ?? "—"),
    ),
    el("h3", {}, "machine reasoning"),
    el("pre", { class: "reasoning" }, record.reasoning.text),
    el("h3", {}, "transcription"),
    editField,
    actions,
  );
}

export function renderApp(store: ReviewStore, root: HTMLElement): void {
  root.replaceChildren(
    el("header", {}, el("h1", {}, "review queue"), renderTabs(store)),
    store.detail ? renderDetail(store) : renderQueue(store),
    store.toast ? el("div", { class: "toast" }, store.toast) : el("div"),
  );
}
