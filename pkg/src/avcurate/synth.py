"""Seeded synthetic manifest generator with planted homophone spans.

Each sample embeds one homophone word in a sentence frame, pairs it with a
second hypothesis carrying a competing homophone, and attaches visual
context that names the gold word. The language model trained on
``lm_training_corpus`` prefers each cluster's dominant word, so context is
decisive exactly when the planted gold word is a non-dominant member.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .phonetics import Lexicon

FRAMES: tuple[tuple[str, str], ...] = (
    ("今天我们讨论", "的问题"),
    ("这个", "非常重要"),
    ("大家都在关注", "的进展"),
    ("他在会上提到", "的情况"),
    ("关于", "的报道有很多"),
    ("我们需要了解", "的内容"),
)

# dominant word appears this many times per frame in the LM corpus,
# each alternative one fewer: enough bias to prefer it, small enough
# for keyword evidence to overturn
_DOMINANT_REPEATS = 3
_ALTERNATIVE_REPEATS = 2


@dataclass(frozen=True)
class HomophoneCluster:
    reading: tuple[tuple[str, int], ...]
    dominant: str
    alternatives: tuple[str, ...]


def plantable_clusters(lex: Lexicon) -> list[HomophoneCluster]:
    """Homophone word groups usable for planting.

    A group needs at least two words sharing an exact (tone-strict)
    reading, and an alternative sharing no character with the dominant
    word, so keyword evidence cannot leak across candidates.
    """
    clusters = []
    for reading, words in sorted(lex.word_index_strict.items()):
        if len(words) < 2:
            continue
        dominant = words[0][0]
        alts = tuple(w for w, _ in words[1:] if not set(w) & set(dominant))
        if alts:
            clusters.append(HomophoneCluster(reading=reading, dominant=dominant, alternatives=alts))
    return clusters


def lm_training_corpus(lex: Lexicon) -> list[str]:
    """Deterministic sentence corpus for the bundled language model."""
    out = []
    for pre, suf in FRAMES:
        for cluster in plantable_clusters(lex):
            out.extend([pre + cluster.dominant + suf] * _DOMINANT_REPEATS)
            for alt in cluster.alternatives:
                out.extend([pre + alt + suf] * _ALTERNATIVE_REPEATS)
    return out


def synth_corpus(seed: int, size: int, lex: Lexicon) -> list[dict]:
    """Generate ``size`` manifest rows with exactly one planted span each."""
    clusters = plantable_clusters(lex)
    if len(clusters) < 5:
        raise ValueError(
            f"lexicon too small: need homophone word pairs for >= 5 spans, found {len(clusters)}"
        )
    rng = random.Random(seed)
    rows = []
    for i in range(size):
        cluster = clusters[i % len(clusters)]
        pre, suf = FRAMES[rng.randrange(len(FRAMES))]
        gold_is_alt = rng.random() < 0.75
        if gold_is_alt:
            gold = cluster.alternatives[rng.randrange(len(cluster.alternatives))]
            competitor = cluster.dominant
        else:
            gold = cluster.dominant
            competitor = cluster.alternatives[rng.randrange(len(cluster.alternatives))]
        sentence_gold = pre + gold + suf
        sentence_bad = pre + competitor + suf
        if rng.random() < 0.5:
            hyp_primary, hyp_secondary = sentence_gold, sentence_bad
        else:
            hyp_primary, hyp_secondary = sentence_bad, sentence_gold
        sid = f"syn-{seed:04d}-{i:04d}"
        rows.append({
            "sample_id": sid,
            "audio_ref": f"audio/{sid}.wav",
            "video_ref": f"video/{sid}.mp4",
            "asr_hyp_primary": hyp_primary,
            "asr_hyp_secondary": hyp_secondary,
            "ocr": {
                "subtitles": [sentence_bad],
                "background": [gold + "广告牌"],
            },
            "caption": f"画面里有{gold},旁边写着{gold}",
            "gold_transcript": sentence_gold,
        })
    return rows


def write_manifest(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n")
