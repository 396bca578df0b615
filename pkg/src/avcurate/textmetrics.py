"""Character-level edit distance, alignment and CER filtering.

Characters are Unicode scalar values (one token per codepoint, CJK and
Latin alike). CER is never clamped: the filter gate needs the raw ratio.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class NormalizeConfig:
    """Flags for text normalization before alignment.

    The upstream transcription conventions differ in punctuation and
    character width, so both are configurable instead of fixed.
    """

    strip_punctuation: bool = True
    fold_width: bool = False


DEFAULT_NORMALIZE = NormalizeConfig()


@dataclass(frozen=True)
class AlignedText:
    """Normalized text tokenized one token per Unicode scalar value."""

    codepoints: tuple[str, ...]
    source: str

    @property
    def text(self) -> str:
        return "".join(self.codepoints)

    def __len__(self) -> int:
        return len(self.codepoints)


def normalize(text: str, cfg: NormalizeConfig = DEFAULT_NORMALIZE) -> AlignedText:
    """Canonicalize ``text`` into an AlignedText.

    Deterministic and idempotent: NFC (NFKC when width folding is on),
    optional punctuation stripping, leading/trailing whitespace removal.
    """
    form = "NFKC" if cfg.fold_width else "NFC"
    out = unicodedata.normalize(form, text)
    if cfg.strip_punctuation:
        out = "".join(c for c in out if not unicodedata.category(c).startswith("P"))
    out = out.strip()
    return AlignedText(codepoints=tuple(out), source=text)


class OpKind(str, Enum):
    MATCH = "match"
    SUBSTITUTE = "substitute"
    INSERT = "insert"
    DELETE = "delete"


@dataclass(frozen=True)
class EditOp:
    """One alignment step.

    insert consumes a hyp token only; delete consumes a ref token only;
    match/substitute consume one of each.
    """

    kind: OpKind
    hyp_index: int | None = None
    ref_index: int | None = None


@dataclass(frozen=True)
class CerReport:
    substitutions: int
    deletions: int
    insertions: int
    matches: int
    ref_len: int
    hyp_len: int
    cer: float | None
    ops: tuple[EditOp, ...] = field(repr=False, default=())

    @property
    def edits(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def defined(self) -> bool:
        return self.cer is not None

    def to_dict(self) -> dict:
        return {
            "substitutions": self.substitutions,
            "deletions": self.deletions,
            "insertions": self.insertions,
            "matches": self.matches,
            "ref_len": self.ref_len,
            "hyp_len": self.hyp_len,
            "cer": self.cer,
            "ops": [
                {"kind": op.kind.value, "hyp_index": op.hyp_index, "ref_index": op.ref_index}
                for op in self.ops
            ],
        }


def cer(hyp: AlignedText, ref: AlignedText) -> CerReport:
    """Minimal edit distance between hyp and ref with a full alignment trace.

    Backtrace tie-breaking is fixed (match > substitute > delete > insert at
    equal cost) so alignments are reproducible. ``cer`` is None when the
    reference is empty but the hypothesis is not.
    """
    h, r = hyp.codepoints, ref.codepoints
    m, n = len(h), len(r)

    dist = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        dist[i][0] = i
    for j in range(1, n + 1):
        dist[0][j] = j
    for i in range(1, m + 1):
        hi = h[i - 1]
        row, prev = dist[i], dist[i - 1]
        for j in range(1, n + 1):
            diag = prev[j - 1] + (hi != r[j - 1])
            dele = row[j - 1] + 1
            ins = prev[j] + 1
            row[j] = diag if diag <= dele and diag <= ins else min(dele, ins)

    ops: list[EditOp] = []
    i, j = m, n
    while i > 0 or j > 0:
        cost = dist[i][j]
        if i > 0 and j > 0 and h[i - 1] == r[j - 1] and dist[i - 1][j - 1] == cost:
            ops.append(EditOp(OpKind.MATCH, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and h[i - 1] != r[j - 1] and dist[i - 1][j - 1] + 1 == cost:
            ops.append(EditOp(OpKind.SUBSTITUTE, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif j > 0 and dist[i][j - 1] + 1 == cost:
            ops.append(EditOp(OpKind.DELETE, None, j - 1))
            j -= 1
        else:
            ops.append(EditOp(OpKind.INSERT, i - 1, None))
            i -= 1
    ops.reverse()

    subs = sum(1 for op in ops if op.kind is OpKind.SUBSTITUTE)
    dels = sum(1 for op in ops if op.kind is OpKind.DELETE)
    inss = sum(1 for op in ops if op.kind is OpKind.INSERT)
    mats = sum(1 for op in ops if op.kind is OpKind.MATCH)
    ratio: float | None
    if n > 0:
        ratio = (subs + dels + inss) / n
    elif m == 0:
        ratio = 0.0
    else:
        ratio = None
    return CerReport(
        substitutions=subs,
        deletions=dels,
        insertions=inss,
        matches=mats,
        ref_len=n,
        hyp_len=m,
        cer=ratio,
        ops=tuple(ops),
    )


def replay_ops(hyp: AlignedText, ops: Sequence[EditOp], ref: AlignedText) -> str:
    """Apply an alignment trace to hyp; the result must equal ref.text."""
    out: list[str] = []
    for op in ops:
        if op.kind is OpKind.INSERT:
            continue
        assert op.ref_index is not None
        out.append(ref.codepoints[op.ref_index])
    return "".join(out)


class GateDecision(str, Enum):
    RETAIN = "retain"
    DISCARD_TRIVIAL = "discard_trivial"
    DISCARD_NOISY = "discard_noisy"


def filter_gate(report: CerReport) -> GateDecision:
    """Partition hypothesis pairs by CER: keep only 0 < CER < 1.

    Zero-CER pairs carry no disambiguation signal; CER >= 1 (or an
    undefined ratio) marks the pair as too noisy to use.
    """
    if report.cer is None:
        return GateDecision.DISCARD_NOISY
    if report.cer == 0:
        return GateDecision.DISCARD_TRIVIAL
    if report.cer >= 1:
        return GateDecision.DISCARD_NOISY
    return GateDecision.RETAIN


def corpus_cer(
    pairs: Iterable[tuple[AlignedText | str, AlignedText | str]],
    cfg: NormalizeConfig = DEFAULT_NORMALIZE,
) -> float:
    """Pooled corpus CER: total edits over total reference length.

    Not a macro-average of per-utterance ratios. Raises ValueError when
    every reference is empty.
    """
    total_edits = 0
    total_ref = 0
    for hyp, ref in pairs:
        h = normalize(hyp, cfg) if isinstance(hyp, str) else hyp
        r = normalize(ref, cfg) if isinstance(ref, str) else ref
        report = cer(h, r)
        total_edits += report.edits
        total_ref += report.ref_len
    if total_ref == 0:
        raise ValueError("corpus_cer undefined: all references are empty")
    return total_edits / total_ref


def edit_distance_matrix(
    hyps: Sequence[Sequence[str]],
    refs: Sequence[Sequence[str]] | None = None,
) -> np.ndarray:
    """All-pairs minimal edit counts, vectorized for corpus-scale sweeps.

    Returns D with D[i, j] = edit distance between hyps[i] and refs[j]
    (refs defaults to hyps). Pairs are processed in blocks grouped by
    length so the DP runs as elementwise array ops; distances must fit
    uint8 (token sequences up to length ~120).
    """
    if refs is None:
        refs = hyps
    vocab: dict[str, int] = {}

    def encode(seqs: Sequence[Sequence[str]]) -> list[np.ndarray]:
        out = []
        for s in seqs:
            ids = np.empty(len(s), dtype=np.int32)
            for k, tok in enumerate(s):
                ids[k] = vocab.setdefault(tok, len(vocab))
            out.append(ids)
        return out

    enc_h = encode(hyps)
    enc_r = encode(refs)
    by_len_h: dict[int, list[int]] = {}
    by_len_r: dict[int, list[int]] = {}
    for idx, s in enumerate(enc_h):
        by_len_h.setdefault(len(s), []).append(idx)
    for idx, s in enumerate(enc_r):
        by_len_r.setdefault(len(s), []).append(idx)

    D = np.zeros((len(hyps), len(refs)), dtype=np.uint8)
    for lh, hidx in by_len_h.items():
        A = np.stack([enc_h[i] for i in hidx]) if lh else np.zeros((len(hidx), 0), np.int32)
        for lr, ridx in by_len_r.items():
            if lh == 0 or lr == 0:
                block = np.full((len(hidx), len(ridx)), max(lh, lr), dtype=np.uint8)
                D[np.ix_(hidx, ridx)] = block
                continue
            B = np.stack([enc_r[j] for j in ridx])
            na, nb = len(hidx), len(ridx)
            prev = [np.full((na, nb), j, dtype=np.uint8) for j in range(lr + 1)]
            for i in range(1, lh + 1):
                cur = [np.full((na, nb), i, dtype=np.uint8)]
                ai = A[:, i - 1][:, None]
                for j in range(1, lr + 1):
                    neq = (ai != B[:, j - 1][None, :]).astype(np.uint8)
                    cell = prev[j - 1] + neq
                    np.minimum(cell, prev[j] + 1, out=cell)
                    np.minimum(cell, cur[j - 1] + 1, out=cell)
                    cur.append(cell)
                prev = cur
            D[np.ix_(hidx, ridx)] = prev[lr]
    return D
