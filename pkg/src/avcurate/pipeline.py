"""End-to-end curation: gate by CER, detect ambiguity, decode, emit records.

External annotators (ASR, OCR, captioning, suitability judges) are
ingestion-time inputs or optional remote clients; the pipeline itself runs
fully offline and deterministically. Per-sample failures are isolated as
skips and never abort a run.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import httpx

from .ambiguity import AmbiguityConfig, DEFAULT_AMBIGUITY, SuitabilityResult, detect_spans, suitability
from .context import extract_keywords
from .decoder import DEFAULT_DECODER, DecoderConfig, decode
from .ngram import NGramModel
from .phonetics import Lexicon, g2p
from .records import (
    AvCotRecord,
    NgramStageScorer,
    PerceptionState,
    Provenance,
    StageScorers,
    chain_score,
    render_reasoning,
    serialize,
    validate_record,
)
from .textmetrics import GateDecision, NormalizeConfig, cer, filter_gate, normalize


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class SampleManifest:
    sample_id: str
    audio_ref: str
    video_ref: str
    asr_hyp_primary: str
    asr_hyp_secondary: str
    ocr_subtitles: tuple[str, ...] = ()
    ocr_background: tuple[str, ...] = ()
    caption: str = ""
    gold_transcript: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "SampleManifest":
        for name in ("sample_id", "asr_hyp_primary", "asr_hyp_secondary"):
            if name not in d or d[name] is None:
                raise ManifestError(f"missing field {name!r}")
        ocr = d.get("ocr") or {}
        return cls(
            sample_id=d["sample_id"],
            audio_ref=d.get("audio_ref", ""),
            video_ref=d.get("video_ref", ""),
            asr_hyp_primary=d["asr_hyp_primary"],
            asr_hyp_secondary=d["asr_hyp_secondary"],
            ocr_subtitles=tuple(ocr.get("subtitles", ())),
            ocr_background=tuple(ocr.get("background", ())),
            caption=d.get("caption", ""),
            gold_transcript=d.get("gold_transcript"),
        )


def load_manifest(path: str | Path) -> list[SampleManifest]:
    samples = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                sample = SampleManifest.from_dict(d)
            except (json.JSONDecodeError, ManifestError) as exc:
                raise ManifestError(f"{path}: line {lineno}: {exc}") from None
            if sample.sample_id in seen:
                raise ManifestError(f"{path}: line {lineno}: duplicate sample_id {sample.sample_id!r}")
            seen.add(sample.sample_id)
            samples.append(sample)
    return samples


class AnnotatorClient:
    """Optional remote judge/reasoner; the pipeline never requires one."""

    def judge_suitability(self, sample: SampleManifest, spans, default: SuitabilityResult) -> SuitabilityResult:
        raise NotImplementedError

    def generate_reasoning(self, record_dict: dict, default_text: str) -> str:
        raise NotImplementedError


class HttpAnnotatorClient(AnnotatorClient):
    def __init__(self, base_url: str, timeout: float = 15.0, retries: int = 2):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries

    def _post(self, route: str, payload: dict) -> dict:
        last: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = httpx.post(f"{self.base_url}{route}", json=payload, timeout=self.timeout)
                resp.raise_for_status()
                return resp.json()
            except httpx.HTTPError as exc:
                last = exc
        raise RuntimeError(f"annotator request {route} failed: {last}")

    def judge_suitability(self, sample, spans, default):
        data = self._post("/suitability", {
            "sample_id": sample.sample_id,
            "hypotheses": [sample.asr_hyp_primary, sample.asr_hyp_secondary],
            "spans": [s.to_dict() for s in spans],
            "default_reason": default.reason,
        })
        return SuitabilityResult(bool(data["suitable"]), str(data.get("reason", default.reason)))

    def generate_reasoning(self, record_dict, default_text):
        data = self._post("/reasoning", {"record": record_dict, "default_text": default_text})
        return str(data["text"])


@dataclass(frozen=True)
class PipelineConfig:
    gate_normalize: NormalizeConfig = NormalizeConfig(strip_punctuation=True)
    text_normalize: NormalizeConfig = NormalizeConfig(strip_punctuation=False)
    ambiguity: AmbiguityConfig = DEFAULT_AMBIGUITY
    decoder: DecoderConfig = DEFAULT_DECODER
    locale: str = "en"
    swap_hypotheses: bool = False
    trust_subtitles: bool = False
    compute_chain_scores: bool = True
    annotators: tuple[tuple[str, str], ...] = (
        ("suitability", "rule-based/1"),
        ("reasoning", "template/1"),
    )


DEFAULT_PIPELINE = PipelineConfig()


@dataclass
class PipelineReport:
    input_count: int = 0
    gate_counts: dict = field(
        default_factory=lambda: {**{d.value: 0 for d in GateDecision}, "error": 0}
    )
    emitted_ids: list[str] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)
    stage_seconds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "gate_counts": self.gate_counts,
            "emitted": len(self.emitted_ids),
            "emitted_ids": self.emitted_ids,
            "skipped": [{"sample_id": s, "reason": r} for s, r in self.skipped],
            "stage_seconds": {k: round(v, 6) for k, v in sorted(self.stage_seconds.items())},
        }


@dataclass
class _SampleOutcome:
    sample_id: str
    gate: GateDecision | None
    record: AvCotRecord | None = None
    skip_reason: str | None = None
    timings: dict = field(default_factory=dict)


def process_sample(
    sample: SampleManifest,
    lex: Lexicon,
    lm: NGramModel,
    cfg: PipelineConfig = DEFAULT_PIPELINE,
    client: AnnotatorClient | None = None,
) -> _SampleOutcome:
    hyp_p, hyp_s = sample.asr_hyp_primary, sample.asr_hyp_secondary
    if cfg.swap_hypotheses:
        hyp_p, hyp_s = hyp_s, hyp_p

    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    gate_hyp = normalize(hyp_p, cfg.gate_normalize)
    gate_ref = normalize(hyp_s, cfg.gate_normalize)
    gate_report = cer(gate_hyp, gate_ref)
    decision = filter_gate(gate_report)
    timings["gate"] = time.perf_counter() - t0
    out = _SampleOutcome(sample.sample_id, decision, timings=timings)
    if decision is not GateDecision.RETAIN:
        return out

    t0 = time.perf_counter()
    text = normalize(hyp_p, cfg.text_normalize)
    pa = g2p(text.text, lex)
    other = normalize(hyp_s, cfg.text_normalize)
    spans = detect_spans(pa, lex, other, cfg.ambiguity)
    suit = suitability(spans, cfg.ambiguity)
    if client is not None:
        suit = client.judge_suitability(sample, spans, suit)
    timings["detect"] = time.perf_counter() - t0
    if not suit.suitable:
        out.skip_reason = f"unsuitable: {suit.reason}"
        return out

    t0 = time.perf_counter()
    ctx = extract_keywords(
        subtitle_text=" ".join(sample.ocr_subtitles) if sample.ocr_subtitles else None,
        background_text=sample.ocr_background,
        caption=sample.caption or None,
        trust_subtitles=cfg.trust_subtitles,
    )
    result = decode(pa, spans, ctx, lm, lex, cfg.decoder)
    timings["decode"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    perception = PerceptionState(visual=ctx, phonetic=pa)
    reasoning_text = render_reasoning(result.trace, perception, cfg.locale)
    record = AvCotRecord(
        sample_id=sample.sample_id,
        media_refs={"audio": sample.audio_ref, "video": sample.video_ref},
        perception=perception,
        reasoning_text=reasoning_text,
        trace=result.trace,
        transcription=result.transcription,
        chain_scores=None,
        provenance=Provenance(
            asr_hyp_primary=hyp_p,
            asr_hyp_secondary=hyp_s,
            cer_report=gate_report,
            gate_decision=decision.value,
            suitability_reason=suit.reason,
            annotators=dict(cfg.annotators),
            aligned_hyp_primary=gate_hyp.text,
            aligned_hyp_secondary=gate_ref.text,
        ),
    )
    if client is not None:
        from .records import record_to_dict

        new_text = client.generate_reasoning(record_to_dict(record), reasoning_text)
        record = replace(record, reasoning_text=new_text)
    if cfg.compute_chain_scores:
        scorer = NgramStageScorer(lm)
        scores = chain_score(record, StageScorers(scorer, scorer, scorer))
        record = replace(record, chain_scores=scores)
    violations = validate_record(record)
    timings["assemble"] = time.perf_counter() - t0
    if violations:
        out.skip_reason = "invalid record: " + "; ".join(violations)
        return out
    out.record = record
    return out


def run(
    samples: Sequence[SampleManifest],
    lex: Lexicon,
    lm: NGramModel,
    cfg: PipelineConfig = DEFAULT_PIPELINE,
    client: AnnotatorClient | None = None,
    jobs: int = 1,
) -> tuple[list[AvCotRecord], PipelineReport]:
    """Process samples; failures skip the sample, never the run.

    With jobs > 1 the emitted records are sorted by sample_id so output
    stays deterministic regardless of scheduling.
    """
    report = PipelineReport(input_count=len(samples))

    def safe(sample: SampleManifest) -> _SampleOutcome:
        try:
            return process_sample(sample, lex, lm, cfg, client)
        except Exception as exc:  # per-sample isolation
            o = _SampleOutcome(sample.sample_id, None)
            o.skip_reason = f"error: {type(exc).__name__}: {exc}"
            return o

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(safe, samples))
        outcomes.sort(key=lambda o: o.sample_id)
    else:
        outcomes = [safe(s) for s in samples]

    records: list[AvCotRecord] = []
    for o in outcomes:
        report.gate_counts[o.gate.value if o.gate is not None else "error"] += 1
        for stage, secs in o.timings.items():
            report.stage_seconds[stage] = report.stage_seconds.get(stage, 0.0) + secs
        if o.record is not None:
            records.append(o.record)
            report.emitted_ids.append(o.sample_id)
        elif o.skip_reason is not None:
            report.skipped.append((o.sample_id, o.skip_reason))
    return records, report


def write_records(records: Iterable[AvCotRecord], out: TextIO | str | Path) -> None:
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(serialize(rec) + "\n")
    else:
        for rec in records:
            out.write(serialize(rec) + "\n")


def run_to_files(
    manifest: str | Path,
    out_dir: str | Path,
    lex: Lexicon,
    lm: NGramModel,
    cfg: PipelineConfig = DEFAULT_PIPELINE,
    client: AnnotatorClient | None = None,
    jobs: int = 1,
) -> PipelineReport:
    samples = load_manifest(manifest)
    records, report = run(samples, lex, lm, cfg, client, jobs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_records(records, out / "records.jsonl")
    (out / "report.json").write_text(
        json.dumps(report.to_dict(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    return report
