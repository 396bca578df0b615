#!/usr/bin/env python3
"""Regenerate the bundled LM corpus and fixture manifest from the lexicon.

Both outputs are deterministic; run after editing the bundled lexicon.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from avcurate.assets import lexicon_path, lm_corpus_path, manifest_path
from avcurate.phonetics import load_lexicon
from avcurate.synth import lm_training_corpus, synth_corpus, write_manifest


def main() -> None:
    lex = load_lexicon(lexicon_path())
    corpus = lm_training_corpus(lex)
    lm_corpus_path().write_text("\n".join(corpus) + "\n", encoding="utf-8")
    print(f"wrote {lm_corpus_path()} ({len(corpus)} sentences)")

    rows = synth_corpus(seed=7, size=20, lex=lex)
    write_manifest(rows, manifest_path())
    print(f"wrote {manifest_path()} ({len(rows)} samples)")


if __name__ == "__main__":
    main()
