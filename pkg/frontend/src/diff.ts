// Character diff cells built verbatim from the stored alignment ops.
// No re-alignment happens here: op indices address the aligned texts
// exactly as the backend computed them (one token per Unicode codepoint).

import type { EditOp, EditOpKind } from "./types.js";

export interface DiffCell {
  kind: EditOpKind;
  hyp: string | null;
  ref: string | null;
  hypIndex: number | null;
  refIndex: number | null;
}

export function buildDiffCells(
  alignedHyp: string,
  alignedRef: string,
  ops: EditOp[],
): DiffCell[] {
  const hyp = Array.from(alignedHyp);
  const ref = Array.from(alignedRef);
  return ops.map((op) => {
    const h = op.hyp_index === null ? null : hyp[op.hyp_index] ?? null;
    const r = op.ref_index === null ? null : ref[op.ref_index] ?? null;
    return {
      kind: op.kind,
      hyp: h,
      ref: r,
      hypIndex: op.hyp_index,
      refIndex: op.ref_index,
    };
  });
}

// Sanity check used before rendering: every op index must resolve and the
// consumed tokens must reconstruct both texts in order.
export function cellsConsistent(
  cells: DiffCell[],
  alignedHyp: string,
  alignedRef: string,
): boolean {
  const hypChars = cells.filter((c) => c.hyp !== null).map((c) => c.hyp).join("");
  const refChars = cells.filter((c) => c.ref !== null).map((c) => c.ref).join("");
  return hypChars === alignedHyp && refChars === alignedRef;
}
