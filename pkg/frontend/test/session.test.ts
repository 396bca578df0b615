// Scripted-session conformance against the real review service: the tab
// counts the UI displays must equal GET /stats after every single step,
// and the rendered diff must sit exactly on the stored alignment ops.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ReviewApi } from "../src/api.js";
import { ReviewStore } from "../src/state.js";
import { buildDiffCells, cellsConsistent } from "../src/diff.js";
import type { RecordJson, Stats } from "../src/types.js";

const PORT = 8890 + (process.pid % 100);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;

async function waitForServer(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/stats`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error(`review service did not come up on ${BASE}`);
}

beforeAll(async () => {
  const storePath = join(mkdtempSync(join(tmpdir(), "review-ui-")), "events.jsonl");
  server = spawn(
    "avcurate",
    ["serve-review", "--store", storePath, "--port", String(PORT)],
    { stdio: "ignore" },
  );
  await waitForServer();
}, 40_000);

afterAll(() => {
  server?.kill();
});

async function fetchStats(): Promise<Stats> {
  const res = await fetch(`${BASE}/stats`);
  return (await res.json()) as Stats;
}

async function expectCountsMatchServer(store: ReviewStore): Promise<void> {
  const stats = await fetchStats();
  expect(store.tabCounts()).toEqual({
    pending: stats.pending,
    accepted: stats.accepted,
    rejected: stats.rejected,
    edited: stats.edited,
    all: stats.total,
  });
}

describe("scripted review session against the live service", () => {
  it("import 10, accept 3, reject 2, edit 1: counts match /stats at every step", async () => {
    const lines = readFileSync(join(__dirname, "fixtures", "records.jsonl"), "utf-8")
      .split("\n")
      .filter((line) => line.trim());
    expect(lines.length).toBe(10);
    const records = lines.map((line) => JSON.parse(line) as RecordJson);

    const api = new ReviewApi(BASE, "ui-e2e");
    const store = new ReviewStore(api);

    const imported = await api.importRecords(records);
    expect(imported.imported).toBe(10);
    await store.refresh();
    await expectCountsMatchServer(store);

    const ids = records.map((r) => r.sample_id).sort();
    const script: [string, "accept" | "reject" | "edit"][] = [
      [ids[0]!, "accept"],
      [ids[1]!, "accept"],
      [ids[2]!, "accept"],
      [ids[3]!, "reject"],
      [ids[4]!, "reject"],
      [ids[5]!, "edit"],
    ];
    for (const [sampleId, action] of script) {
      const ok = await store.verdict(
        sampleId,
        action,
        action === "edit" ? "人工修订的最终转写" : undefined,
      );
      expect(ok).toBe(true);
      await expectCountsMatchServer(store);
    }

    const finalStats = await fetchStats();
    expect(finalStats).toEqual({ pending: 4, accepted: 3, rejected: 2, edited: 1, total: 10 });

    // exported test set substitutes the edit
    const exportText = await (await fetch(`${BASE}/export`)).text();
    const exported = exportText.split("\n").filter((l) => l.trim()).map((l) => JSON.parse(l));
    expect(exported.length).toBe(4);
    const edited = exported.find((r) => r.sample_id === ids[5]);
    expect(edited.transcription).toBe("人工修订的最终转写");
  }, 40_000);

  it("rendered diff for a live record matches the stored ops positions", async () => {
    const api = new ReviewApi(BASE);
    const store = new ReviewStore(api);
    await store.setTab("all");
    const item = store.items[0]!;
    const prov = item.record.provenance;
    const ops = prov.cer!.ops;
    const cells = buildDiffCells(prov.aligned_hyp_primary, prov.aligned_hyp_secondary, ops);
    expect(cells.length).toBe(ops.length);
    const hypChars = Array.from(prov.aligned_hyp_primary);
    const refChars = Array.from(prov.aligned_hyp_secondary);
    cells.forEach((cell, i) => {
      const op = ops[i]!;
      expect(cell.kind).toBe(op.kind);
      expect(cell.hyp).toBe(op.hyp_index === null ? null : hypChars[op.hyp_index]);
      expect(cell.ref).toBe(op.ref_index === null ? null : refChars[op.ref_index]);
    });
    expect(cellsConsistent(cells, prov.aligned_hyp_primary, prov.aligned_hyp_secondary)).toBe(true);
  }, 20_000);

  it("verdict on an unknown id surfaces an API error and rolls back", async () => {
    const api = new ReviewApi(BASE);
    const store = new ReviewStore(api);
    await store.setTab("all");
    const before = store.snapshot().stats;
    const ok = await store.verdict("does-not-exist", "accept");
    expect(ok).toBe(false);
    expect(store.toast).toBeTruthy();
    expect(store.stats).toEqual(before);
  }, 20_000);
});
