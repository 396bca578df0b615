#!/usr/bin/env python3
"""Grid-search the fusion weights on a synthetic dev corpus.

Reports dev CER over the grid and the selected (lambda_lm, lambda_ctx);
this is how the shipped defaults were picked.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from avcurate.ambiguity import detect_spans
from avcurate.assets import default_lexicon, default_lm
from avcurate.context import extract_keywords
from avcurate.decoder import DecoderConfig, build_segments, tune_weights
from avcurate.phonetics import g2p
from avcurate.pipeline import DEFAULT_PIPELINE, SampleManifest
from avcurate.synth import synth_corpus
from avcurate.textmetrics import normalize


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=100)
    parser.add_argument("--seed", type=int, default=13)
    parser.add_argument("--grid-lm", default="0.5,1.0,2.0")
    parser.add_argument("--grid-ctx", default="0.0,0.1,0.25,0.5,1.0")
    args = parser.parse_args()

    lex = default_lexicon()
    lm = default_lm()
    base = DecoderConfig()
    cfg = DEFAULT_PIPELINE

    dev = []
    for row in synth_corpus(seed=args.seed, size=args.size, lex=lex):
        s = SampleManifest.from_dict(row)
        pa = g2p(normalize(s.asr_hyp_primary, cfg.text_normalize).text, lex)
        other = normalize(s.asr_hyp_secondary, cfg.text_normalize)
        spans = detect_spans(pa, lex, other)
        ctx = extract_keywords(
            subtitle_text=" ".join(s.ocr_subtitles) or None,
            background_text=s.ocr_background,
            caption=s.caption or None,
        )
        dev.append((build_segments(pa, spans, ctx, lex, base), s.gold_transcript))

    grid_lm = [float(x) for x in args.grid_lm.split(",")]
    grid_ctx = [float(x) for x in args.grid_ctx.split(",")]
    lam_lm, lam_ctx, best = tune_weights(dev, lm, grid_lm, grid_ctx, base)
    print(f"dev size {args.size} (seed {args.seed})")
    print(f"best: lambda_lm={lam_lm} lambda_ctx={lam_ctx} dev_cer={best:.4f}")


if __name__ == "__main__":
    main()
