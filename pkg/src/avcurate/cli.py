"""Single entry point: every stage of the toolchain as a subcommand.

Defaults come from the bundled fixtures; a key=value config file can
override them and explicit flags win over both.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import assets
from .ambiguity import AmbiguityConfig, detect_spans, suitability
from .context import extract_keywords
from .decoder import DecoderConfig, build_segments, decode, tune_weights
from .evaluation import ablate, evaluate_outputs, format_table
from .ngram import AddKNgramModel, ArpaNgramModel, NGramModel
from .phonetics import Lexicon, Syllable, ToneMode, g2p, homophones, load_lexicon
from .pipeline import (
    DEFAULT_PIPELINE,
    HttpAnnotatorClient,
    PipelineConfig,
    load_manifest,
    run_to_files,
)
from .records import deserialize, validate_record
from .synth import synth_corpus, write_manifest
from .textmetrics import NormalizeConfig, cer, filter_gate, normalize


def _read_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    cfg: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SystemExit(f"config {path}: line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        cfg[key.strip()] = value.strip()
    return cfg


def _pick(flag_value, config: dict, key: str, default, cast=str):
    if flag_value is not None:
        return flag_value
    if key in config:
        return cast(config[key])
    return default


def _load_lex(path: str | None, config: dict) -> Lexicon:
    p = _pick(path, config, "lexicon", None)
    return load_lexicon(p) if p else assets.default_lexicon()


def _load_lm(path: str | None, config: dict) -> NGramModel:
    p = _pick(path, config, "lm", None)
    if p is None:
        return assets.default_lm()
    if str(p).endswith(".arpa"):
        return ArpaNgramModel.load(p)
    lines = Path(p).read_text(encoding="utf-8").splitlines()
    return AddKNgramModel.train([ln for ln in lines if ln.strip()], order=3, k=0.01)


def _decoder_cfg(args, config: dict) -> DecoderConfig:
    return DecoderConfig(
        lambda_lm=_pick(getattr(args, "lambda_lm", None), config, "lambda_lm", 1.0, float),
        lambda_ctx=_pick(getattr(args, "lambda_ctx", None), config, "lambda_ctx", 0.5, float),
        lambda_phon=_pick(getattr(args, "lambda_phon", None), config, "lambda_phon", 0.0, float),
        beam_width=_pick(getattr(args, "beam", None), config, "beam_width", 8, int),
        tone_mode=ToneMode(_pick(getattr(args, "tone_mode", None), config, "tone_mode", "strict")),
    )


def _emit(payload, as_json: bool, human: str | None = None) -> None:
    if as_json:
        print(json.dumps(payload, ensure_ascii=False, indent=2))
    else:
        print(human if human is not None else json.dumps(payload, ensure_ascii=False, indent=2))


# ---------------------------------------------------------------- commands

def cmd_cer(args, config) -> int:
    cfg = NormalizeConfig(strip_punctuation=not args.keep_punctuation)
    hyp = Path(args.hyp).read_text(encoding="utf-8")
    ref = Path(args.ref).read_text(encoding="utf-8")
    report = cer(normalize(hyp, cfg), normalize(ref, cfg))
    human = (
        f"cer={report.cer if report.cer is not None else 'undefined'} "
        f"S={report.substitutions} D={report.deletions} I={report.insertions} "
        f"N={report.ref_len}"
    )
    _emit(report.to_dict(), args.json, human)
    return 0


def cmd_filter(args, config) -> int:
    cfg = NormalizeConfig(strip_punctuation=not args.keep_punctuation)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        with open(args.pairs, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                d = json.loads(line)
                if "hyp" not in d or "ref" not in d:
                    raise SystemExit(f"{args.pairs}: line {lineno}: needs 'hyp' and 'ref'")
                report = cer(normalize(d["hyp"], cfg), normalize(d["ref"], cfg))
                d["cer"] = report.cer
                d["decision"] = filter_gate(report).value
                out.write(json.dumps(d, ensure_ascii=False, separators=(",", ":")) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def cmd_g2p(args, config) -> int:
    lex = _load_lex(args.lexicon, config)
    pa = g2p(args.text, lex)
    payload = {
        "source_text": pa.source_text,
        "tokens": [
            {"text": t.text, "span": [t.start, t.end],
             "syllable": t.syllable.display if t.syllable else None, "oov": t.oov}
            for t in pa.tokens
        ],
    }
    _emit(payload, args.json, pa.render_text())
    return 0


def cmd_homophones(args, config) -> int:
    lex = _load_lex(args.lexicon, config)
    span = [Syllable.parse(p) for p in args.span.split()]
    mode = ToneMode.TONELESS if args.toneless else ToneMode.STRICT
    ranked = homophones(span, lex, mode, max_span=args.max_span, branch_cap=args.branch_cap)
    payload = [{"text": t, "weight": w} for t, w in ranked]
    human = "\n".join(f"{t}\t{w:g}" for t, w in ranked)
    _emit(payload, args.json, human)
    return 0


def cmd_detect(args, config) -> int:
    lex = _load_lex(args.lexicon, config)
    pa = g2p(args.text, lex)
    other = normalize(args.other, NormalizeConfig(strip_punctuation=False)) if args.other else None
    spans = detect_spans(pa, lex, other)
    suit = suitability(spans)
    payload = {
        "spans": [s.to_dict() for s in spans],
        "suitable": suit.suitable,
        "reason": suit.reason,
    }
    _emit(payload, args.json, suit.reason)
    return 0


def cmd_disambiguate(args, config) -> int:
    lex = _load_lex(args.lexicon, config)
    lm = _load_lm(args.lm, config)
    dcfg = _decoder_cfg(args, config)
    ctx_fields = json.loads(Path(args.context).read_text(encoding="utf-8")) if args.context else {}
    ctx = extract_keywords(
        subtitle_text=ctx_fields.get("subtitle_text"),
        background_text=ctx_fields.get("background_text", ()),
        caption=ctx_fields.get("caption"),
        trust_subtitles=args.trust_subtitles,
    )
    pa = g2p(args.text, lex)
    other = normalize(args.other, NormalizeConfig(strip_punctuation=False)) if args.other else None
    spans = detect_spans(pa, lex, other)
    result = decode(pa, spans, ctx, lm, lex, dcfg)
    payload = {"transcription": result.transcription, "total_score": result.total_score}
    if args.trace:
        payload["trace"] = result.trace.to_dict()
    _emit(payload, args.json, result.transcription if not args.trace
          else result.transcription + "\n" + json.dumps(result.trace.to_dict(), ensure_ascii=False, indent=2))
    return 0


def cmd_pipeline_run(args, config) -> int:
    lex = _load_lex(args.lexicon, config)
    lm = _load_lm(args.lm, config)
    pcfg = replace(
        DEFAULT_PIPELINE,
        decoder=_decoder_cfg(args, config),
        swap_hypotheses=args.swap_hypotheses,
        trust_subtitles=args.trust_subtitles,
        locale=_pick(args.locale, config, "locale", "en"),
    )
    client = HttpAnnotatorClient(args.annotator_url) if args.annotator_url else None
    report = run_to_files(args.manifest, args.out, lex, lm, pcfg, client, jobs=args.jobs or 1)
    print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
    return 0


def cmd_synth_corpus(args, config) -> int:
    lex = _load_lex(args.lexicon, config)
    rows = synth_corpus(seed=args.seed if args.seed is not None else 1, size=args.size, lex=lex)
    if args.out:
        write_manifest(rows, args.out)
        print(f"wrote {len(rows)} samples to {args.out}")
    else:
        for row in rows:
            print(json.dumps(row, ensure_ascii=False, separators=(",", ":")))
    return 0


def _load_refs(path: str) -> dict[str, str]:
    refs: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            text = d.get("text", d.get("gold_transcript"))
            if text is None or "sample_id" not in d:
                raise SystemExit(f"{path}: reference lines need sample_id and text/gold_transcript")
            refs[d["sample_id"]] = text
    return refs


def cmd_evaluate(args, config) -> int:
    outputs: dict[str, str] = {}
    with open(args.records, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                outputs[d["sample_id"]] = d["transcription"]
    refs = _load_refs(args.refs)
    result = evaluate_outputs(outputs, refs)
    _emit(result.to_dict(), args.json, format_table({"records": result}))
    if result.missing:
        print(f"warning: {len(result.missing)} sample(s) missing references", file=sys.stderr)
    return 0


def cmd_ablate(args, config) -> int:
    lex = _load_lex(args.lexicon, config)
    lm = _load_lm(args.lm, config)
    samples = load_manifest(args.manifest)
    pcfg = replace(DEFAULT_PIPELINE, decoder=_decoder_cfg(args, config))
    result = ablate(samples, lex, lm, pcfg, seed=args.seed if args.seed is not None else 0)
    _emit(result.to_dict(), args.json, format_table(result.results))
    return 0


def cmd_tune_weights(args, config) -> int:
    lex = _load_lex(args.lexicon, config)
    lm = _load_lm(args.lm, config)
    samples = load_manifest(args.manifest)
    grid_lm = [float(x) for x in args.grid_lm.split(",") if x.strip()]
    grid_ctx = [float(x) for x in args.grid_ctx.split(",") if x.strip()]
    base = _decoder_cfg(args, config)
    dev = []
    for s in samples:
        if s.gold_transcript is None:
            raise SystemExit(f"sample {s.sample_id} has no gold transcript")
        text = normalize(s.asr_hyp_primary, NormalizeConfig(strip_punctuation=False))
        pa = g2p(text.text, lex)
        other = normalize(s.asr_hyp_secondary, NormalizeConfig(strip_punctuation=False))
        spans = detect_spans(pa, lex, other)
        ctx = extract_keywords(
            subtitle_text=" ".join(s.ocr_subtitles) if s.ocr_subtitles else None,
            background_text=s.ocr_background,
            caption=s.caption or None,
        )
        dev.append((build_segments(pa, spans, ctx, lex, base), s.gold_transcript))
    lam_lm, lam_ctx, best_cer = tune_weights(dev, lm, grid_lm, grid_ctx, base)
    payload = {"lambda_lm": lam_lm, "lambda_ctx": lam_ctx, "dev_cer": best_cer}
    _emit(payload, args.json, f"lambda_lm={lam_lm} lambda_ctx={lam_ctx} dev_cer={best_cer:.4f}")
    return 0


def cmd_serve_review(args, config) -> int:
    from .review.service import serve

    serve(args.store, port=args.port, host=args.host, ui_dir=args.ui)
    return 0


def cmd_validate_records(args, config) -> int:
    bad = 0
    total = 0
    with open(args.records, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            total += 1
            try:
                record = deserialize(line)
                violations = validate_record(record)
            except ValueError as exc:
                violations = [str(exc)]
            if violations:
                bad += 1
                for v in violations:
                    print(f"line {lineno}: {v}")
    print(f"{total - bad}/{total} records valid")
    return 1 if bad else 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="avcurate", description=__doc__)
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--seed", type=int, default=None, help="seed for seeded commands")
    parser.add_argument("--jobs", type=int, default=None, help="parallel workers where supported")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        return p

    p = add("cer", cmd_cer, help="character error rate between two text files")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--keep-punctuation", action="store_true")

    p = add("filter", cmd_filter, help="annotate hyp/ref JSONL pairs with the gate decision")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out")
    p.add_argument("--keep-punctuation", action="store_true")

    p = add("g2p", cmd_g2p, help="text to pinyin syllables")
    p.add_argument("--text", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--json", action="store_true")

    p = add("homophones", cmd_homophones, help="character strings sharing a pinyin span")
    p.add_argument("--span", required=True, help='e.g. "he2 yi4"')
    p.add_argument("--toneless", action="store_true")
    p.add_argument("--lexicon")
    p.add_argument("--max-span", type=int, default=4)
    p.add_argument("--branch-cap", type=int, default=50)
    p.add_argument("--json", action="store_true")

    p = add("detect-ambiguity", cmd_detect, help="find ambiguous spans in a hypothesis")
    p.add_argument("--text", required=True)
    p.add_argument("--other", help="second system hypothesis")
    p.add_argument("--lexicon")
    p.add_argument("--json", action="store_true")

    p = add("disambiguate", cmd_disambiguate, help="decode a hypothesis with visual context")
    p.add_argument("--text", required=True)
    p.add_argument("--other")
    p.add_argument("--context", help="JSON file: subtitle_text, background_text, caption")
    p.add_argument("--lm")
    p.add_argument("--lexicon")
    p.add_argument("--lambda-lm", dest="lambda_lm", type=float)
    p.add_argument("--lambda-ctx", dest="lambda_ctx", type=float)
    p.add_argument("--lambda-phon", dest="lambda_phon", type=float)
    p.add_argument("--beam", type=int)
    p.add_argument("--tone-mode", dest="tone_mode", choices=["strict", "toneless"])
    p.add_argument("--trust-subtitles", action="store_true")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--json", action="store_true")

    pipe = sub.add_parser("pipeline", help="curation pipeline")
    pipe_sub = pipe.add_subparsers(dest="pipeline_command", required=True)
    p = pipe_sub.add_parser("run", help="run the full curation pipeline")
    p.set_defaults(fn=cmd_pipeline_run)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--lm")
    p.add_argument("--annotator-url")
    p.add_argument("--swap-hypotheses", action="store_true")
    p.add_argument("--trust-subtitles", action="store_true")
    p.add_argument("--locale")
    p.add_argument("--lambda-lm", dest="lambda_lm", type=float)
    p.add_argument("--lambda-ctx", dest="lambda_ctx", type=float)
    p.add_argument("--lambda-phon", dest="lambda_phon", type=float)
    p.add_argument("--beam", type=int)
    p.add_argument("--tone-mode", dest="tone_mode", choices=["strict", "toneless"])

    p = add("synth-corpus", cmd_synth_corpus, help="generate a planted synthetic manifest")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--lexicon")
    p.add_argument("--out")

    p = add("evaluate", cmd_evaluate, help="corpus CER of records against references")
    p.add_argument("--records", required=True)
    p.add_argument("--refs", required=True)
    p.add_argument("--json", action="store_true")

    p = add("ablate", cmd_ablate, help="full vs empty vs shuffled context CER")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--lexicon")
    p.add_argument("--lm")
    p.add_argument("--lambda-lm", dest="lambda_lm", type=float)
    p.add_argument("--lambda-ctx", dest="lambda_ctx", type=float)
    p.add_argument("--lambda-phon", dest="lambda_phon", type=float)
    p.add_argument("--beam", type=int)
    p.add_argument("--tone-mode", dest="tone_mode", choices=["strict", "toneless"])
    p.add_argument("--json", action="store_true")

    p = add("tune-weights", cmd_tune_weights, help="grid-search fusion weights on a dev manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--grid-lm", default="0.5,1.0,2.0")
    p.add_argument("--grid-ctx", default="0.0,0.25,0.5,1.0")
    p.add_argument("--lexicon")
    p.add_argument("--lm")
    p.add_argument("--lambda-lm", dest="lambda_lm", type=float)
    p.add_argument("--lambda-ctx", dest="lambda_ctx", type=float)
    p.add_argument("--lambda-phon", dest="lambda_phon", type=float)
    p.add_argument("--beam", type=int)
    p.add_argument("--tone-mode", dest="tone_mode", choices=["strict", "toneless"])
    p.add_argument("--json", action="store_true")

    p = add("serve-review", cmd_serve_review, help="run the review HTTP service")
    p.add_argument("--store", required=True)
    p.add_argument("--port", type=int, default=8777)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui", help="directory with the built review UI bundle")

    p = add("validate-records", cmd_validate_records, help="check record invariants")
    p.add_argument("--records", required=True)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = _read_config(args.config)
    try:
        return args.fn(args, config)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
