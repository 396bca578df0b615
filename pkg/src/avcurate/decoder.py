"""Context-biased homophone decoding over a span lattice.

Scoring is log-linear shallow fusion: lambda_lm * LM log-prob of the full
character sequence plus lambda_ctx * keyword support per chosen candidate.
With an empty context the decoder reduces exactly to LM-only selection.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Sequence

from .ambiguity import AmbiguousSpan
from .context import VisualContext, context_score
from .ngram import NGramModel
from .phonetics import Lexicon, PhoneticSequence, ToneMode, homophones
from .textmetrics import corpus_cer

REASON_LOWER = "lower total score"
REASON_ZERO_CTX = "zero context support"
REASON_PRUNED = "pruned from beam"


@dataclass(frozen=True)
class DecoderConfig:
    lambda_lm: float = 1.0
    lambda_ctx: float = 0.5
    lambda_phon: float = 0.0
    beam_width: int = 8
    tone_mode: ToneMode = ToneMode.STRICT
    max_span: int = 4
    branch_cap: int = 50


DEFAULT_DECODER = DecoderConfig()


@dataclass(frozen=True)
class LatticeCandidate:
    text: str
    ctx_score: float
    phon_bonus: float = 0.0


@dataclass(frozen=True)
class FixedSegment:
    text: str


@dataclass(frozen=True)
class ChoiceSegment:
    original: str
    candidates: tuple[LatticeCandidate, ...]
    span: AmbiguousSpan | None = None
    fallback: bool = False


Segment = FixedSegment | ChoiceSegment


@dataclass(frozen=True)
class CandidateScore:
    text: str
    lm_logp: float
    ctx_score: float
    phon_bonus: float
    total: float

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "lm_logp": self.lm_logp,
            "ctx_score": self.ctx_score,
            "phon_bonus": self.phon_bonus,
            "total": self.total,
        }


@dataclass(frozen=True)
class SpanDecision:
    char_range: tuple[int, int]
    syllables: tuple[str, ...]
    candidates: tuple[CandidateScore, ...]
    chosen: str
    evidence: tuple[str, ...]
    trigger: str | None = None
    span: AmbiguousSpan | None = None
    fallback: bool = False

    def to_dict(self) -> dict:
        return {
            "char_range": list(self.char_range),
            "syllables": list(self.syllables),
            "trigger": self.trigger,
            "candidates": [c.to_dict() for c in self.candidates],
            "chosen": self.chosen,
            "evidence": list(self.evidence),
            "fallback": self.fallback,
        }


@dataclass(frozen=True)
class DisambiguationTrace:
    decisions: tuple[SpanDecision, ...]
    eliminated: tuple[tuple[tuple[str, str], ...], ...]

    def to_dict(self) -> dict:
        return {
            "decisions": [d.to_dict() for d in self.decisions],
            "eliminated": [[[c, r] for c, r in per] for per in self.eliminated],
        }


EMPTY_TRACE = DisambiguationTrace(decisions=(), eliminated=())


@dataclass(frozen=True)
class DecodeResult:
    transcription: str
    trace: DisambiguationTrace
    total_score: float


def build_segments(
    pa: PhoneticSequence,
    spans: Sequence[AmbiguousSpan],
    ctx: VisualContext,
    lex: Lexicon,
    cfg: DecoderConfig = DEFAULT_DECODER,
) -> list[Segment]:
    """Expand ambiguous spans into candidate segments, copying the rest."""
    ordered = sorted(spans, key=lambda s: s.char_range)
    for a, b in zip(ordered, ordered[1:]):
        if b.char_range[0] < a.char_range[1]:
            raise ValueError("spans overlap")
    text = pa.source_text
    segments: list[Segment] = []
    pos = 0
    for span in ordered:
        lo, hi = span.char_range
        if lo > pos:
            segments.append(FixedSegment(text[pos:lo]))
        original = text[lo:hi]
        syls = [pa.tokens[i].syllable for i in range(*span.syllable_range)]
        try:
            ranked = homophones(syls, lex, cfg.tone_mode, cfg.max_span, cfg.branch_cap)
        except ValueError:
            ranked = []
        strict_texts: set[str] = set()
        if cfg.tone_mode is ToneMode.TONELESS and cfg.lambda_phon:
            strict_texts = {t for t, _ in homophones(syls, lex, ToneMode.STRICT, cfg.max_span, cfg.branch_cap)}
        cands: dict[str, LatticeCandidate] = {}
        for cand_text, _w in ranked:
            if len(cand_text) != len(original):
                continue
            bonus = 1.0 if (not strict_texts or cand_text in strict_texts) else 0.0
            cands[cand_text] = LatticeCandidate(cand_text, context_score(cand_text, ctx), bonus)
        fallback = not cands
        if original not in cands:
            cands[original] = LatticeCandidate(original, context_score(original, ctx), 1.0)
        segments.append(ChoiceSegment(
            original=original,
            candidates=tuple(cands[t] for t in sorted(cands)),
            span=span,
            fallback=fallback,
        ))
        pos = hi
    if pos < len(text):
        segments.append(FixedSegment(text[pos:]))
    return segments


@dataclass
class _Beam:
    tokens: tuple[str, ...]
    lm_sum: float
    ctx_sum: float
    phon_sum: float
    choices: tuple[str, ...] = ()

    def total(self, cfg: DecoderConfig) -> float:
        return cfg.lambda_lm * self.lm_sum + cfg.lambda_ctx * self.ctx_sum + cfg.lambda_phon * self.phon_sum


def decode_segments(
    segments: Sequence[Segment],
    lm: NGramModel,
    cfg: DecoderConfig = DEFAULT_DECODER,
) -> DecodeResult:
    """Beam search left-to-right over the segment lattice.

    After search, a coordinate pass re-checks every span against the final
    path so the reported choice is always the per-span argmax; ties break
    lexicographically on candidate text everywhere.
    """
    if cfg.beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    choice_segs = [s for s in segments if isinstance(s, ChoiceSegment)]

    def extend(beam: _Beam, text: str) -> tuple[tuple[str, ...], float]:
        # BOS padding must stay in the history: a short prefix is still
        # sentence-initial, not an isolated fragment
        add = lm.sequence_logp(
            tuple(text),
            history=lm.start_history() + beam.tokens,
            include_eos=False,
        )
        return beam.tokens + tuple(text), beam.lm_sum + add

    beams = [_Beam(tokens=(), lm_sum=0.0, ctx_sum=0.0, phon_sum=0.0)]
    survived: list[set[str]] = []
    for seg in segments:
        if isinstance(seg, FixedSegment):
            nxt = []
            for b in beams:
                toks, lmsum = extend(b, seg.text)
                nxt.append(replace(b, tokens=toks, lm_sum=lmsum))
            beams = nxt
        else:
            expanded = []
            for b in beams:
                for cand in seg.candidates:
                    toks, lmsum = extend(b, cand.text)
                    expanded.append(_Beam(
                        tokens=toks,
                        lm_sum=lmsum,
                        ctx_sum=b.ctx_sum + cand.ctx_score,
                        phon_sum=b.phon_sum + cand.phon_bonus,
                        choices=b.choices + (cand.text,),
                    ))
            expanded.sort(key=lambda b: (-b.total(cfg), b.tokens))
            beams = expanded[: cfg.beam_width]
            survived.append({b.choices[-1] for b in beams})

    finals = []
    for b in beams:
        eos = lm.sequence_logp((), history=lm.start_history() + b.tokens, include_eos=True)
        finals.append((b, b.total(cfg) + cfg.lambda_lm * eos))
    finals.sort(key=lambda pair: (-pair[1], pair[0].tokens))
    best = finals[0][0]

    choices = list(best.choices)
    choices = _refine(segments, choice_segs, choices, lm, cfg)
    transcription = _assemble(segments, choices)
    total = _score_assembled(segments, choices, lm, cfg)
    trace = _build_trace(segments, choice_segs, choices, survived, lm, cfg)
    return DecodeResult(transcription=transcription, trace=trace, total_score=total)


def _assemble(segments: Sequence[Segment], choices: Sequence[str]) -> str:
    out = []
    ci = 0
    for seg in segments:
        if isinstance(seg, FixedSegment):
            out.append(seg.text)
        else:
            out.append(choices[ci])
            ci += 1
    return "".join(out)


def _score_assembled(segments, choices, lm, cfg) -> float:
    text = _assemble(segments, choices)
    lm_part = lm.sequence_logp(tuple(text), include_eos=True)
    ci = 0
    ctx_part = 0.0
    phon_part = 0.0
    for seg in segments:
        if isinstance(seg, ChoiceSegment):
            cand = next(c for c in seg.candidates if c.text == choices[ci])
            ctx_part += cand.ctx_score
            phon_part += cand.phon_bonus
            ci += 1
    return cfg.lambda_lm * lm_part + cfg.lambda_ctx * ctx_part + cfg.lambda_phon * phon_part


def _candidate_total(segments, choices, seg_index, cand, lm, cfg) -> float:
    """Per-span counterfactual: full-path LM with this candidate, own context."""
    trial = list(choices)
    trial[seg_index] = cand.text
    lm_logp = lm.sequence_logp(tuple(_assemble(segments, trial)), include_eos=True)
    return cfg.lambda_lm * lm_logp + cfg.lambda_ctx * cand.ctx_score + cfg.lambda_phon * cand.phon_bonus


def _refine(segments, choice_segs, choices, lm, cfg) -> list[str]:
    # Coordinate fixpoint: guarantees the chosen candidate is the per-span
    # argmax even when beam pruning missed it. Each accepted switch strictly
    # improves (total, -text), so the loop terminates.
    changed = True
    while changed:
        changed = False
        for ci, seg in enumerate(choice_segs):
            scored = [
                (-_candidate_total(segments, choices, ci, cand, lm, cfg), cand.text)
                for cand in seg.candidates
            ]
            scored.sort()
            best_text = scored[0][1]
            if best_text != choices[ci]:
                choices[ci] = best_text
                changed = True
    return choices


def _build_trace(segments, choice_segs, choices, survived, lm, cfg) -> DisambiguationTrace:
    decisions = []
    eliminated = []
    for ci, seg in enumerate(choice_segs):
        scored = []
        for cand in seg.candidates:
            trial = list(choices)
            trial[ci] = cand.text
            lm_logp = lm.sequence_logp(tuple(_assemble(segments, trial)), include_eos=True)
            total = cfg.lambda_lm * lm_logp + cfg.lambda_ctx * cand.ctx_score + cfg.lambda_phon * cand.phon_bonus
            scored.append(CandidateScore(cand.text, lm_logp, cand.ctx_score, cand.phon_bonus, total))
        scored.sort(key=lambda c: (-c.total, c.text))
        chosen = choices[ci]
        chosen_score = next(c for c in scored if c.text == chosen)
        span = seg.span
        per_elim = []
        for c in scored:
            if c.text == chosen:
                continue
            if c.text not in survived[ci] and c.text != chosen:
                reason = REASON_PRUNED
            elif c.ctx_score == 0 and chosen_score.ctx_score > 0:
                reason = REASON_ZERO_CTX
            else:
                reason = REASON_LOWER
            per_elim.append((c.text, reason))
        decisions.append(SpanDecision(
            char_range=span.char_range if span else (0, len(seg.original)),
            syllables=(),
            candidates=tuple(scored),
            chosen=chosen,
            evidence=(),
            span=span,
            fallback=seg.fallback,
        ))
        eliminated.append(tuple(per_elim))
    return DisambiguationTrace(decisions=tuple(decisions), eliminated=tuple(eliminated))


def decode(
    pa: PhoneticSequence,
    spans: Sequence[AmbiguousSpan],
    ctx: VisualContext,
    lm: NGramModel,
    lex: Lexicon,
    cfg: DecoderConfig = DEFAULT_DECODER,
) -> DecodeResult:
    """Resolve ambiguous spans of a hypothesis using LM + visual evidence."""
    segments = build_segments(pa, spans, ctx, lex, cfg)
    result = decode_segments(segments, lm, cfg)
    # attach syllable displays and keyword evidence, which need pa/ctx
    decisions = []
    for dec in result.trace.decisions:
        if dec.span is not None:
            syls = tuple(
                pa.tokens[i].syllable.display
                for i in range(*dec.span.syllable_range)
                if pa.tokens[i].syllable is not None
            )
        else:
            syls = dec.syllables
        evidence = _matched_keywords(dec.chosen, ctx)
        trigger = dec.span.trigger.value if dec.span is not None else None
        decisions.append(replace(dec, syllables=syls, evidence=evidence, trigger=trigger))
    trace = DisambiguationTrace(decisions=tuple(decisions), eliminated=result.trace.eliminated)
    return DecodeResult(result.transcription, trace, result.total_score)


def _matched_keywords(candidate: str, ctx: VisualContext) -> tuple[str, ...]:
    from .context import _longest_common_substring

    hits = [
        (kw, w) for kw, w in ctx.keywords.items()
        if _longest_common_substring(candidate, kw) > 0
    ]
    hits.sort(key=lambda kv: (-kv[1], kv[0]))
    return tuple(kw for kw, _ in hits[:8])


def tune_weights(
    dev_set: Sequence[tuple[list[Segment], str]],
    lm: NGramModel,
    grid_lm: Sequence[float],
    grid_ctx: Sequence[float],
    base_cfg: DecoderConfig = DEFAULT_DECODER,
) -> tuple[float, float, float]:
    """Exhaustive grid search of fusion weights minimizing corpus CER.

    Ties prefer the smaller lambda_ctx (lean on context less), then the
    smaller lambda_lm. Returns (lambda_lm, lambda_ctx, best_cer).
    """
    if not dev_set:
        raise ValueError("empty dev set")
    if not grid_lm or not grid_ctx:
        raise ValueError("empty weight grid")
    best: tuple[float, float, float] | None = None
    for lam_ctx, lam_lm in itertools.product(sorted(grid_ctx), sorted(grid_lm)):
        cfg = replace(base_cfg, lambda_lm=lam_lm, lambda_ctx=lam_ctx)
        pairs = []
        for segments, ref in dev_set:
            out = decode_segments(segments, lm, cfg).transcription
            pairs.append((out, ref))
        score = corpus_cer(pairs)
        if best is None or score < best[2]:
            best = (lam_lm, lam_ctx, score)
    assert best is not None
    return best
