"""Detection of phonetically ambiguous spans in a hypothesis.

Two triggers: a syllable window whose reading is shared by enough lexicon
words (homophone density), and character disagreements between the two
system hypotheses that keep the same pronunciation (the homophone-confusion
signature).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .phonetics import Lexicon, PhoneticSequence, ToneMode, g2p
from .textmetrics import AlignedText, EditOp, OpKind, cer


class Trigger(str, Enum):
    HOMOPHONE_DENSITY = "homophone_density"
    ASR_DISAGREEMENT = "asr_disagreement"
    BOTH = "both"


@dataclass(frozen=True)
class AmbiguityConfig:
    density_threshold: int = 3
    max_span: int = 4
    tone_mode: ToneMode = ToneMode.TONELESS
    min_spans: int = 1


DEFAULT_AMBIGUITY = AmbiguityConfig()


@dataclass(frozen=True)
class AmbiguousSpan:
    """Token range of the phonetic sequence flagged as ambiguous."""

    syllable_range: tuple[int, int]
    char_range: tuple[int, int]
    trigger: Trigger
    candidate_count: int
    disagreement_ops: tuple[EditOp, ...] = ()

    def to_dict(self) -> dict:
        return {
            "syllable_range": list(self.syllable_range),
            "char_range": list(self.char_range),
            "trigger": self.trigger.value,
            "candidate_count": self.candidate_count,
        }


def detect_spans(
    pa: PhoneticSequence,
    lex: Lexicon,
    other_hyp: AlignedText | None = None,
    cfg: AmbiguityConfig = DEFAULT_AMBIGUITY,
) -> list[AmbiguousSpan]:
    """Find ambiguous spans; overlapping or adjacent hits are merged."""
    raw: list[AmbiguousSpan] = []
    raw.extend(_density_spans(pa, lex, cfg))
    if other_hyp is not None:
        raw.extend(_disagreement_spans(pa, lex, other_hyp, cfg))
    return _merge_spans(raw, pa)


def _han_runs(pa: PhoneticSequence) -> list[tuple[int, int]]:
    runs: list[tuple[int, int]] = []
    start = None
    for i, tok in enumerate(pa.tokens):
        if tok.syllable is not None:
            if start is None:
                start = i
        elif start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(pa.tokens)))
    return runs


def _density_spans(pa, lex, cfg) -> list[AmbiguousSpan]:
    spans = []
    for run_start, run_end in _han_runs(pa):
        for width in range(2, cfg.max_span + 1):
            for i in range(run_start, run_end - width + 1):
                window = [pa.tokens[j].syllable for j in range(i, i + width)]
                count = len(lex.word_candidates(window, cfg.tone_mode))
                if count >= cfg.density_threshold:
                    spans.append(AmbiguousSpan(
                        syllable_range=(i, i + width),
                        char_range=(pa.tokens[i].start, pa.tokens[i + width - 1].end),
                        trigger=Trigger.HOMOPHONE_DENSITY,
                        candidate_count=count,
                    ))
    return spans


def _disagreement_spans(pa, lex, other_hyp, cfg) -> list[AmbiguousSpan]:
    primary = AlignedText(codepoints=tuple(pa.source_text), source=pa.source_text)
    report = cer(primary, other_hyp)
    other_pa = g2p(other_hyp.text, lex)
    tok_at: dict[int, int] = {}
    for idx, tok in enumerate(pa.tokens):
        for pos in range(tok.start, tok.end):
            tok_at[pos] = idx
    other_at: dict[int, int] = {}
    for idx, tok in enumerate(other_pa.tokens):
        for pos in range(tok.start, tok.end):
            other_at[pos] = idx

    spans = []
    for op in report.ops:
        if op.kind is not OpKind.SUBSTITUTE:
            continue
        mine = pa.tokens[tok_at[op.hyp_index]]
        theirs = other_pa.tokens[other_at[op.ref_index]]
        if mine.syllable is None or theirs.syllable is None:
            continue
        if cfg.tone_mode is ToneMode.TONELESS:
            same = mine.syllable.base == theirs.syllable.base
        else:
            same = mine.syllable == theirs.syllable
        if not same:
            continue
        idx = tok_at[op.hyp_index]
        count = max(2, len(lex.char_candidates(mine.syllable, cfg.tone_mode)))
        spans.append(AmbiguousSpan(
            syllable_range=(idx, idx + 1),
            char_range=(mine.start, mine.end),
            trigger=Trigger.ASR_DISAGREEMENT,
            candidate_count=count,
            disagreement_ops=(op,),
        ))
    return spans


def _merge_spans(raw: list[AmbiguousSpan], pa: PhoneticSequence) -> list[AmbiguousSpan]:
    if not raw:
        return []
    raw.sort(key=lambda s: (s.syllable_range, s.trigger.value))
    merged: list[AmbiguousSpan] = []
    for span in raw:
        if merged and span.syllable_range[0] <= merged[-1].syllable_range[1]:
            prev = merged[-1]
            lo = prev.syllable_range[0]
            hi = max(prev.syllable_range[1], span.syllable_range[1])
            if prev.trigger is span.trigger:
                trig = prev.trigger
            else:
                trig = Trigger.BOTH
            merged[-1] = AmbiguousSpan(
                syllable_range=(lo, hi),
                char_range=(pa.tokens[lo].start, pa.tokens[hi - 1].end),
                trigger=trig,
                candidate_count=max(prev.candidate_count, span.candidate_count),
                disagreement_ops=prev.disagreement_ops + span.disagreement_ops,
            )
        else:
            merged.append(span)
    return merged


@dataclass(frozen=True)
class SuitabilityResult:
    suitable: bool
    reason: str


def suitability(spans: list[AmbiguousSpan], cfg: AmbiguityConfig = DEFAULT_AMBIGUITY) -> SuitabilityResult:
    """Rule-based replacement for the external suitability judge.

    A sample qualifies when it has at least cfg.min_spans ambiguous spans;
    the reason string enumerates them for the human reviewer.
    """
    if len(spans) < cfg.min_spans:
        return SuitabilityResult(False, "no ambiguous segments" if not spans else
                                 f"only {len(spans)} ambiguous segment(s), need {cfg.min_spans}")
    parts = []
    for i, s in enumerate(spans, start=1):
        parts.append(
            f"#{i} chars {s.char_range[0]}-{s.char_range[1]} "
            f"[{s.trigger.value}] {s.candidate_count} candidates"
        )
    return SuitabilityResult(True, f"{len(spans)} ambiguous segment(s): " + "; ".join(parts))
