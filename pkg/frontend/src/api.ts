// Thin fetch client for the review service.

import type { ItemPage, ReviewItemJson, Stats, Status, VerdictAction } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const res = await fetch(url, init);
  if (!res.ok) {
    let detail = `${res.status} ${res.statusText}`;
    try {
      const body = await res.json();
      if (body && typeof body.detail === "string") detail = body.detail;
      else if (body && body.detail) detail = JSON.stringify(body.detail);
    } catch {
      // non-JSON error body: keep the status text
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export class ReviewApi {
  constructor(private base: string = "", private reviewer: string = "") {}

  setReviewer(name: string): void {
    this.reviewer = name;
  }

  getStats(): Promise<Stats> {
    return request<Stats>(`${this.base}/stats`);
  }

  listItems(status: Status | null, page = 1, pageSize = 25): Promise<ItemPage> {
    const params = new URLSearchParams({ page: String(page), page_size: String(pageSize) });
    if (status) params.set("status", status);
    return request<ItemPage>(`${this.base}/items?${params}`);
  }

  getItem(sampleId: string): Promise<ReviewItemJson> {
    return request<ReviewItemJson>(`${this.base}/items/${encodeURIComponent(sampleId)}`);
  }

  postVerdict(sampleId: string, action: VerdictAction, editedText?: string): Promise<ReviewItemJson> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.reviewer) headers["X-Reviewer"] = this.reviewer;
    return request<ReviewItemJson>(`${this.base}/items/${encodeURIComponent(sampleId)}/verdict`, {
      method: "POST",
      headers,
      body: JSON.stringify({ action, edited_text: editedText ?? null }),
    });
  }

  importRecords(records: unknown[]): Promise<{ imported: number; skipped: string[]; rejected: unknown[] }> {
    return request(`${this.base}/import`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ records }),
    });
  }

  exportUrl(): string {
    return `${this.base}/export`;
  }
}
