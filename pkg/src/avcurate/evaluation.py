"""Corpus evaluation and the context ablation (full / empty / shuffled).

The shuffled condition derangement-permutes visual contexts across samples
so no sample keeps its own context, mirroring inference with an unrelated
video; the empty condition is the all-blank analog and must match
context-weight-zero decoding exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .ambiguity import AmbiguityConfig, DEFAULT_AMBIGUITY, detect_spans
from .context import EMPTY_CONTEXT, VisualContext, extract_keywords
from .decoder import DEFAULT_DECODER, DecoderConfig, decode
from .ngram import NGramModel
from .phonetics import Lexicon, g2p
from .pipeline import PipelineConfig, DEFAULT_PIPELINE, SampleManifest
from .textmetrics import NormalizeConfig, cer, normalize


@dataclass(frozen=True)
class EvalResult:
    cer: float
    edits: int
    ref_len: int
    scored: int
    missing: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "cer": self.cer,
            "edits": self.edits,
            "ref_len": self.ref_len,
            "scored": self.scored,
            "missing": list(self.missing),
        }


def evaluate_outputs(
    outputs: dict[str, str],
    references: dict[str, str],
    cfg: NormalizeConfig = NormalizeConfig(),
) -> EvalResult:
    """Pooled corpus CER of outputs against references by sample id.

    Samples without a reference are excluded and listed as warnings.
    """
    edits = 0
    ref_len = 0
    scored = 0
    missing = []
    for sid in sorted(outputs):
        if sid not in references:
            missing.append(sid)
            continue
        rep = cer(normalize(outputs[sid], cfg), normalize(references[sid], cfg))
        edits += rep.edits
        ref_len += rep.ref_len
        scored += 1
    if ref_len == 0:
        raise ValueError("no scorable samples: all references missing or empty")
    return EvalResult(cer=edits / ref_len, edits=edits, ref_len=ref_len,
                      scored=scored, missing=tuple(missing))


def evaluate(
    conditions: dict[str, dict[str, str]],
    references: dict[str, str],
    cfg: NormalizeConfig = NormalizeConfig(),
) -> dict[str, EvalResult]:
    return {name: evaluate_outputs(outs, references, cfg) for name, outs in conditions.items()}


def format_table(results: dict[str, EvalResult]) -> str:
    width = max(len(name) for name in results)
    lines = [f"{'condition'.ljust(width)}  {'CER':>8}  {'edits':>6}  {'ref':>6}  {'n':>4}"]
    for name in results:
        r = results[name]
        lines.append(f"{name.ljust(width)}  {r.cer:8.4f}  {r.edits:6d}  {r.ref_len:6d}  {r.scored:4d}")
    return "\n".join(lines)


ABLATION_CONDITIONS = ("full_context", "empty_context", "shuffled_context")


@dataclass
class AblationResult:
    results: dict[str, EvalResult]
    outputs: dict[str, dict[str, str]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {name: self.results[name].to_dict() for name in ABLATION_CONDITIONS}


def _derangement(n: int, seed: int) -> list[int]:
    """Seeded permutation with no fixed points: a shuffled single n-cycle."""
    order = list(range(n))
    random.Random(seed).shuffle(order)
    perm = [0] * n
    for k in range(n):
        perm[order[k]] = order[(k + 1) % n]
    return perm


def ablate(
    samples: list[SampleManifest],
    lex: Lexicon,
    lm: NGramModel,
    cfg: PipelineConfig = DEFAULT_PIPELINE,
    seed: int = 0,
) -> AblationResult:
    """Decode every sample under its own, empty, and deranged contexts."""
    if len(samples) < 2:
        raise ValueError("ablation shuffle needs at least 2 samples")
    missing_gold = [s.sample_id for s in samples if s.gold_transcript is None]
    if missing_gold:
        raise ValueError(f"samples without gold transcripts: {missing_gold[:5]}")

    ordered = sorted(samples, key=lambda s: s.sample_id)
    prepared = []
    contexts: list[VisualContext] = []
    for s in ordered:
        text = normalize(s.asr_hyp_primary, cfg.text_normalize)
        pa = g2p(text.text, lex)
        other = normalize(s.asr_hyp_secondary, cfg.text_normalize)
        spans = detect_spans(pa, lex, other, cfg.ambiguity)
        prepared.append((s, pa, spans))
        contexts.append(extract_keywords(
            subtitle_text=" ".join(s.ocr_subtitles) if s.ocr_subtitles else None,
            background_text=s.ocr_background,
            caption=s.caption or None,
            trust_subtitles=cfg.trust_subtitles,
        ))

    perm = _derangement(len(ordered), seed)
    references = {s.sample_id: s.gold_transcript for s in ordered}
    outputs: dict[str, dict[str, str]] = {name: {} for name in ABLATION_CONDITIONS}
    for i, (s, pa, spans) in enumerate(prepared):
        outputs["full_context"][s.sample_id] = decode(pa, spans, contexts[i], lm, lex, cfg.decoder).transcription
        outputs["empty_context"][s.sample_id] = decode(pa, spans, EMPTY_CONTEXT, lm, lex, cfg.decoder).transcription
        outputs["shuffled_context"][s.sample_id] = decode(pa, spans, contexts[perm[i]], lm, lex, cfg.decoder).transcription

    results = {name: evaluate_outputs(outs, references) for name, outs in outputs.items()}
    return AblationResult(results=results, outputs=outputs)
