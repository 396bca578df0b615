// View-model for the review queue. The server is the single source of
// truth: every verdict is confirmed by refetching stats, and a failed
// verdict rolls the optimistic change back.

import { ReviewApi } from "./api.js";
import type { ReviewItemJson, Stats, Status, VerdictAction } from "./types.js";

export type Tab = Status | "all";

export interface StoreSnapshot {
  stats: Stats;
  tab: Tab;
  page: number;
  items: ReviewItemJson[];
  total: number;
  selected: number;
  detail: ReviewItemJson | null;
  toast: string | null;
}

const EMPTY_STATS: Stats = { pending: 0, accepted: 0, rejected: 0, edited: 0, total: 0 };

export class ReviewStore {
  stats: Stats = { ...EMPTY_STATS };
  tab: Tab = "pending";
  page = 1;
  pageSize = 25;
  items: ReviewItemJson[] = [];
  total = 0;
  selected = 0;
  detail: ReviewItemJson | null = null;
  toast: string | null = null;

  private listeners: (() => void)[] = [];

  constructor(private api: ReviewApi) {}

  subscribe(fn: () => void): void {
    this.listeners.push(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  // Tab counts as displayed in the header; always the last-fetched /stats.
  tabCounts(): Record<Tab, number> {
    return {
      pending: this.stats.pending,
      accepted: this.stats.accepted,
      rejected: this.stats.rejected,
      edited: this.stats.edited,
      all: this.stats.total,
    };
  }

  async refresh(): Promise<void> {
    this.stats = await this.api.getStats();
    const status = this.tab === "all" ? null : this.tab;
    const pageData = await this.api.listItems(status, this.page, this.pageSize);
    this.items = pageData.items;
    this.total = pageData.total;
    if (this.selected >= this.items.length) {
      this.selected = Math.max(0, this.items.length - 1);
    }
    this.notify();
  }

  async setTab(tab: Tab): Promise<void> {
    this.tab = tab;
    this.page = 1;
    this.selected = 0;
    await this.refresh();
  }

  async setPage(page: number): Promise<void> {
    this.page = Math.max(1, page);
    await this.refresh();
  }

  moveSelection(delta: number): void {
    if (!this.items.length) return;
    this.selected = Math.min(this.items.length - 1, Math.max(0, this.selected + delta));
    this.notify();
  }

  selectedItem(): ReviewItemJson | null {
    return this.items[this.selected] ?? null;
  }

  async openDetail(sampleId: string): Promise<void> {
    this.detail = await this.api.getItem(sampleId);
    this.notify();
  }

  closeDetail(): void {
    this.detail = null;
    this.notify();
  }

  setToast(message: string | null): void {
    this.toast = message;
    this.notify();
  }

  /**
   * Send a verdict with an optimistic local update. On success the
   * authoritative state is refetched; on failure the snapshot is restored
   * and the error surfaces as a toast.
   */
  async verdict(sampleId: string, action: VerdictAction, editedText?: string): Promise<boolean> {
    const itemsBefore = this.items;
    const statsBefore = this.stats;
    const detailBefore = this.detail;

    const newStatus: Status = action === "accept" ? "accepted"
      : action === "reject" ? "rejected" : "edited";
    this.items = this.items.map((it) =>
      it.sample_id === sampleId ? { ...it, status: newStatus } : it,
    );
    if (this.detail && this.detail.sample_id === sampleId) {
      this.detail = { ...this.detail, status: newStatus };
    }
    this.notify();

    try {
      const updated = await this.api.postVerdict(sampleId, action, editedText);
      if (this.detail && this.detail.sample_id === sampleId) {
        this.detail = updated;
      }
      await this.refresh();
      return true;
    } catch (err) {
      this.items = itemsBefore;
      this.stats = statsBefore;
      this.detail = detailBefore;
      this.toast = err instanceof Error ? err.message : String(err);
      this.notify();
      return false;
    }
  }

  snapshot(): StoreSnapshot {
    return {
      stats: { ...this.stats },
      tab: this.tab,
      page: this.page,
      items: this.items,
      total: this.total,
      selected: this.selected,
      detail: this.detail,
      toast: this.toast,
    };
  }
}
