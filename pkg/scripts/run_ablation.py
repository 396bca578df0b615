#!/usr/bin/env python3
"""Ablation experiment: context-on vs empty vs shuffled contexts.

Sweeps a few corpus sizes and seeds on the planted synthetic corpus and
prints the per-condition corpus CER tables plus a JSON summary.
"""

import argparse
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from avcurate.assets import default_lexicon, default_lm
from avcurate.evaluation import ablate, format_table
from avcurate.pipeline import SampleManifest
from avcurate.synth import synth_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="50,200", help="comma-separated corpus sizes")
    parser.add_argument("--seeds", default="1,2,3", help="comma-separated seeds")
    parser.add_argument("--json-out", help="write the summary JSON here")
    args = parser.parse_args()

    lex = default_lexicon()
    lm = default_lm()
    summary = []
    for size in (int(s) for s in args.sizes.split(",")):
        for seed in (int(s) for s in args.seeds.split(",")):
            rows = synth_corpus(seed=seed, size=size, lex=lex)
            samples = [SampleManifest.from_dict(r) for r in rows]
            t0 = time.perf_counter()
            result = ablate(samples, lex, lm, seed=seed)
            elapsed = time.perf_counter() - t0
            print(f"\n== size={size} seed={seed} ({elapsed:.1f}s)")
            print(format_table(result.results))
            summary.append({
                "size": size,
                "seed": seed,
                "seconds": round(elapsed, 2),
                **{name: r.cer for name, r in result.results.items()},
            })
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        print(f"\nwrote {args.json_out}")


if __name__ == "__main__":
    main()
