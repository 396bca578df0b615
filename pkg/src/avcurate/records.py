"""Perception/Reasoning/Transcription records and factorized chain scoring.

A record bundles what was seen (visual context), what was heard (phonetic
sequence), the disambiguation trajectory, and the final transcription.
Chain scores decompose the record's joint log-probability into the three
stages, which must add up exactly in log space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import httpx

from .context import VisualContext
from .decoder import CandidateScore, DisambiguationTrace, SpanDecision
from .ngram import NGramModel
from .phonetics import PhoneticSequence, PhoneToken, Syllable
from .textmetrics import CerReport, EditOp, OpKind

SCHEMA_VERSION = "avcot/1"


class RecordError(ValueError):
    pass


@dataclass(frozen=True)
class PerceptionState:
    visual: VisualContext
    phonetic: PhoneticSequence


@dataclass(frozen=True)
class ChainScores:
    logp_perception: float
    logp_reasoning: float
    logp_transcription: float
    logp_joint: float


@dataclass(frozen=True)
class Provenance:
    asr_hyp_primary: str
    asr_hyp_secondary: str
    cer_report: CerReport | None
    gate_decision: str
    suitability_reason: str
    annotators: dict[str, str]
    # the exact texts the gate alignment ran over (post-normalization);
    # downstream diff views index into these with the alignment ops
    aligned_hyp_primary: str = ""
    aligned_hyp_secondary: str = ""


@dataclass(frozen=True)
class AvCotRecord:
    sample_id: str
    media_refs: dict[str, str]
    perception: PerceptionState
    reasoning_text: str
    trace: DisambiguationTrace
    transcription: str
    chain_scores: ChainScores | None
    provenance: Provenance


_NO_AMBIGUITY = {
    "en": "No ambiguous spans were detected; the phonetic sequence supports a single reading.",
    "zh": "未检测到歧义片段;拼音序列只有一种合理读法。",
}


def render_reasoning(trace: DisambiguationTrace, perception: PerceptionState, locale: str = "en") -> str:
    """Deterministic reasoning text: one paragraph per span decision.

    States the ambiguous syllables, the scored candidates, the keyword
    evidence, why each rejected candidate was eliminated, and the choice.
    """
    if locale not in _NO_AMBIGUITY:
        raise ValueError(f"unsupported locale {locale!r}")
    if not trace.decisions:
        return _NO_AMBIGUITY[locale]
    n_chars = len(perception.phonetic.source_text)
    paragraphs = []
    for idx, (dec, elim) in enumerate(zip(trace.decisions, trace.eliminated), start=1):
        lo, hi = dec.char_range
        if lo < 0 or hi > n_chars or lo >= hi:
            raise RecordError(f"decision {idx} span chars {lo}-{hi} outside source text")
        cands = ", ".join(
            f"{c.text} (lm={c.lm_logp:.4f}, ctx={c.ctx_score:.4f}, total={c.total:.4f})"
            for c in dec.candidates
        )
        if locale == "zh":
            lines = [f"片段{idx}:拼音「{' '.join(dec.syllables)}」(第{lo}-{hi}字)。候选:{cands}。"]
            if dec.evidence:
                lines.append(f"视觉证据关键词:{'、'.join(dec.evidence)}。")
            else:
                lines.append("无视觉证据。")
            if elim:
                lines.append("排除:" + ";".join(f"{c}({r})" for c, r in elim) + "。")
            lines.append(f"选定:「{dec.chosen}」。")
        else:
            lines = [f"Span {idx}: syllables '{' '.join(dec.syllables)}' (chars {lo}-{hi}). Candidates: {cands}."]
            if dec.evidence:
                lines.append("Visual evidence keywords: " + ", ".join(dec.evidence) + ".")
            else:
                lines.append("No visual evidence.")
            if elim:
                lines.append("Rejected: " + "; ".join(f"{c} ({r})" for c, r in elim) + ".")
            lines.append(f"Chosen: {dec.chosen}.")
        paragraphs.append(" ".join(lines))
    return "\n".join(paragraphs)


class StageScorer:
    """Scores a token sequence given earlier stages as conditioning text."""

    name = "abstract"

    def score(self, text: str, conditioning: Sequence[str] = ()) -> float:
        raise NotImplementedError


class NgramStageScorer(StageScorer):
    """Default offline scorer: the character LM primed with the conditioning tail."""

    name = "ngram"

    def __init__(self, lm: NGramModel):
        self.lm = lm

    def score(self, text: str, conditioning: Sequence[str] = ()) -> float:
        return self.lm.score_text(text, conditioning="".join(conditioning), include_eos=False)


class ExternalStageScorer(StageScorer):
    """Remote scoring service; pipeline-only, never used in the offline path."""

    name = "external"

    def __init__(self, endpoint: str, timeout: float = 10.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def score(self, text: str, conditioning: Sequence[str] = ()) -> float:
        resp = httpx.post(
            self.endpoint,
            json={"text": text, "conditioning": list(conditioning)},
            timeout=self.timeout,
        )
        resp.raise_for_status()
        return float(resp.json()["logp"])


@dataclass(frozen=True)
class StageScorers:
    perception: StageScorer
    reasoning: StageScorer
    transcription: StageScorer


def chain_score(record: AvCotRecord, scorers: StageScorers) -> ChainScores:
    """Score the causal chain: perception, then reasoning, then transcription.

    Conditioning is enforced structurally: the perception scorer sees no
    other stage, reasoning sees perception, transcription sees both. The
    joint is the exact sum of the three stage log-probabilities.
    """
    cv_text = record.perception.visual.render_text()
    pa_text = record.perception.phonetic.render_text()

    lp_visual = _checked(scorers.perception.score(cv_text, ()), "perception")
    lp_phonetic = _checked(scorers.perception.score(pa_text, (cv_text,)), "perception")
    lp_perception = lp_visual + lp_phonetic
    lp_reasoning = _checked(
        scorers.reasoning.score(record.reasoning_text, (cv_text, pa_text)), "reasoning"
    )
    lp_transcription = _checked(
        scorers.transcription.score(record.transcription, (cv_text, pa_text, record.reasoning_text)),
        "transcription",
    )
    return ChainScores(
        logp_perception=lp_perception,
        logp_reasoning=lp_reasoning,
        logp_transcription=lp_transcription,
        logp_joint=lp_perception + lp_reasoning + lp_transcription,
    )


def _checked(logp: float, stage: str) -> float:
    if logp > 0:
        raise ValueError(f"{stage} scorer returned positive log-probability {logp}")
    return logp


def validate_record(record: AvCotRecord) -> list[str]:
    """Collect invariant violations; an empty list means the record is valid."""
    violations: list[str] = []
    if not record.sample_id:
        violations.append("missing sample_id")
    if record.transcription is None:
        violations.append("missing transcription")
    for idx, dec in enumerate(record.trace.decisions, start=1):
        lo, hi = dec.char_range
        actual = record.transcription[lo:hi]
        if actual != dec.chosen:
            violations.append(
                f"reasoning/transcription inconsistency: span {idx} chose {dec.chosen!r} "
                f"but transcription has {actual!r} at chars {lo}-{hi}"
            )
    if len(record.trace.decisions) != len(record.trace.eliminated):
        violations.append("trace decisions and eliminations are not parallel")
    else:
        for idx, (dec, elim) in enumerate(zip(record.trace.decisions, record.trace.eliminated), start=1):
            listed = sorted(c.text for c in dec.candidates)
            accounted = sorted([dec.chosen] + [c for c, _ in elim])
            if listed != accounted:
                violations.append(f"span {idx}: candidates not partitioned into chosen + eliminated")
    cs = record.chain_scores
    if cs is not None:
        if cs.logp_joint != cs.logp_perception + cs.logp_reasoning + cs.logp_transcription:
            violations.append("chain score additivity violated")
    if not record.reasoning_text:
        violations.append("missing reasoning text")
    return violations


# ---------------------------------------------------------------------------
# canonical JSON serialization

def _phonetic_to_dict(pa: PhoneticSequence) -> dict:
    return {
        "source_text": pa.source_text,
        "tokens": [
            {
                "text": t.text,
                "span": [t.start, t.end],
                "syllable": f"{t.syllable.base}{t.syllable.tone}" if t.syllable else None,
                "oov": t.oov,
            }
            for t in pa.tokens
        ],
    }


def _phonetic_from_dict(d: dict) -> PhoneticSequence:
    tokens = []
    for td in d["tokens"]:
        syl = Syllable.parse(td["syllable"]) if td["syllable"] else None
        tokens.append(PhoneToken(td["text"], td["span"][0], td["span"][1], syl, td["oov"]))
    return PhoneticSequence(tokens=tuple(tokens), source_text=d["source_text"])


def _trace_to_dict(trace: DisambiguationTrace) -> dict:
    return trace.to_dict()


def _trace_from_dict(d: dict) -> DisambiguationTrace:
    decisions = []
    for dd in d["decisions"]:
        decisions.append(SpanDecision(
            char_range=(dd["char_range"][0], dd["char_range"][1]),
            syllables=tuple(dd["syllables"]),
            candidates=tuple(
                CandidateScore(c["text"], c["lm_logp"], c["ctx_score"], c["phon_bonus"], c["total"])
                for c in dd["candidates"]
            ),
            chosen=dd["chosen"],
            evidence=tuple(dd["evidence"]),
            trigger=dd.get("trigger"),
            fallback=dd["fallback"],
        ))
    eliminated = tuple(tuple((c, r) for c, r in per) for per in d["eliminated"])
    return DisambiguationTrace(decisions=tuple(decisions), eliminated=eliminated)


def _cer_to_dict(rep: CerReport | None) -> dict | None:
    if rep is None:
        return None
    return rep.to_dict()


def _cer_from_dict(d: dict | None) -> CerReport | None:
    if d is None:
        return None
    return CerReport(
        substitutions=d["substitutions"],
        deletions=d["deletions"],
        insertions=d["insertions"],
        matches=d["matches"],
        ref_len=d["ref_len"],
        hyp_len=d["hyp_len"],
        cer=d["cer"],
        ops=tuple(
            EditOp(OpKind(o["kind"]), o["hyp_index"], o["ref_index"]) for o in d["ops"]
        ),
    )


def record_to_dict(record: AvCotRecord) -> dict:
    cs = record.chain_scores
    return {
        "schema": SCHEMA_VERSION,
        "sample_id": record.sample_id,
        "media_refs": {k: record.media_refs[k] for k in sorted(record.media_refs)},
        "perception": {
            "visual": record.perception.visual.to_dict(),
            "phonetic": _phonetic_to_dict(record.perception.phonetic),
        },
        "reasoning": {
            "text": record.reasoning_text,
            **_trace_to_dict(record.trace),
        },
        "transcription": record.transcription,
        "chain_scores": None if cs is None else {
            "logp_perception": cs.logp_perception,
            "logp_reasoning": cs.logp_reasoning,
            "logp_transcription": cs.logp_transcription,
            "logp_joint": cs.logp_joint,
        },
        "provenance": {
            "asr_hyp_primary": record.provenance.asr_hyp_primary,
            "asr_hyp_secondary": record.provenance.asr_hyp_secondary,
            "aligned_hyp_primary": record.provenance.aligned_hyp_primary,
            "aligned_hyp_secondary": record.provenance.aligned_hyp_secondary,
            "cer": _cer_to_dict(record.provenance.cer_report),
            "gate_decision": record.provenance.gate_decision,
            "suitability_reason": record.provenance.suitability_reason,
            "annotators": {k: record.provenance.annotators[k] for k in sorted(record.provenance.annotators)},
        },
    }


_REQUIRED_FIELDS = ("schema", "sample_id", "media_refs", "perception", "reasoning",
                    "transcription", "provenance")


def record_from_dict(d: dict) -> AvCotRecord:
    for name in _REQUIRED_FIELDS:
        if name not in d:
            raise RecordError(f"missing required field: {name}")
    if d["schema"] != SCHEMA_VERSION:
        raise RecordError(f"unsupported schema version {d['schema']!r} (expected {SCHEMA_VERSION})")
    cs = d.get("chain_scores")
    prov = d["provenance"]
    return AvCotRecord(
        sample_id=d["sample_id"],
        media_refs=dict(d["media_refs"]),
        perception=PerceptionState(
            visual=VisualContext.from_dict(d["perception"]["visual"]),
            phonetic=_phonetic_from_dict(d["perception"]["phonetic"]),
        ),
        reasoning_text=d["reasoning"]["text"],
        trace=_trace_from_dict(d["reasoning"]),
        transcription=d["transcription"],
        chain_scores=None if cs is None else ChainScores(
            logp_perception=cs["logp_perception"],
            logp_reasoning=cs["logp_reasoning"],
            logp_transcription=cs["logp_transcription"],
            logp_joint=cs["logp_joint"],
        ),
        provenance=Provenance(
            asr_hyp_primary=prov["asr_hyp_primary"],
            asr_hyp_secondary=prov["asr_hyp_secondary"],
            cer_report=_cer_from_dict(prov.get("cer")),
            gate_decision=prov["gate_decision"],
            suitability_reason=prov["suitability_reason"],
            annotators=dict(prov["annotators"]),
            aligned_hyp_primary=prov.get("aligned_hyp_primary", ""),
            aligned_hyp_secondary=prov.get("aligned_hyp_secondary", ""),
        ),
    )


def serialize(record: AvCotRecord) -> str:
    """One-line canonical JSON; re-serializing a round-trip is byte-identical."""
    return json.dumps(record_to_dict(record), ensure_ascii=False, separators=(",", ":"))


def deserialize(line: str) -> AvCotRecord:
    try:
        d = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordError(f"invalid JSON: {exc}") from None
    if not isinstance(d, dict):
        raise RecordError("record line is not a JSON object")
    return record_from_dict(d)
