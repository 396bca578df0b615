"""Structured visual context and the keyword evidence score.

Spoken-subtitle text is stored but excluded from keyword extraction by
default: on-screen subtitles are the classic hallucination source, so the
decoder only leans on background text and captions unless explicitly told
to trust subtitles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .phonetics import is_han


@dataclass(frozen=True)
class VisualContext:
    subtitle_text: str | None = None
    background_text: tuple[str, ...] = ()
    caption: str | None = None
    keywords: dict[str, int] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.keywords

    def to_dict(self) -> dict:
        return {
            "subtitle_text": self.subtitle_text,
            "background_text": list(self.background_text),
            "caption": self.caption,
            "keywords": {k: self.keywords[k] for k in sorted(self.keywords)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VisualContext":
        return cls(
            subtitle_text=d.get("subtitle_text"),
            background_text=tuple(d.get("background_text", ())),
            caption=d.get("caption"),
            keywords=dict(d.get("keywords", {})),
        )

    def render_text(self) -> str:
        """Canonical flat text used when scoring the perception stage."""
        parts = []
        if self.subtitle_text:
            parts.append(self.subtitle_text)
        parts.extend(self.background_text)
        if self.caption:
            parts.append(self.caption)
        return " | ".join(parts)


EMPTY_CONTEXT = VisualContext()


def _han_runs(text: str) -> list[str]:
    runs: list[str] = []
    cur: list[str] = []
    for ch in text:
        if is_han(ch):
            cur.append(ch)
        elif cur:
            runs.append("".join(cur))
            cur = []
    if cur:
        runs.append("".join(cur))
    return runs


def extract_keywords(
    subtitle_text: str | None = None,
    background_text: tuple[str, ...] | list[str] = (),
    caption: str | None = None,
    trust_subtitles: bool = False,
) -> VisualContext:
    """Build a VisualContext with character n-gram keywords (n = 2..4).

    Keywords come from background text and the caption, counted per
    occurrence; n-grams never cross non-Han boundaries. Subtitles join
    the pool only when trust_subtitles is set.
    """
    sources: list[str] = list(background_text)
    if caption:
        sources.append(caption)
    if trust_subtitles and subtitle_text:
        sources.append(subtitle_text)

    counts: dict[str, int] = {}
    for src in sources:
        for run in _han_runs(src):
            for n in range(2, 5):
                for i in range(len(run) - n + 1):
                    gram = run[i:i + n]
                    counts[gram] = counts.get(gram, 0) + 1
    return VisualContext(
        subtitle_text=subtitle_text,
        background_text=tuple(background_text),
        caption=caption,
        keywords=counts,
    )


def _longest_common_substring(a: str, b: str) -> int:
    if not a or not b:
        return 0
    best = 0
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        cur = [0] * (len(b) + 1)
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
                if cur[j] > best:
                    best = cur[j]
        prev = cur
    return best


def context_score(candidate: str, ctx: VisualContext) -> float:
    """Keyword support for a candidate: sum of weight * overlap fraction.

    Overlap is the longest common substring with each keyword, normalized
    by candidate length. Empty context scores exactly 0.
    """
    if not candidate:
        raise ValueError("empty candidate")
    if not ctx.keywords:
        return 0.0
    total = 0.0
    for kw, weight in ctx.keywords.items():
        overlap = _longest_common_substring(candidate, kw)
        if overlap:
            total += weight * (overlap / len(candidate))
    return total
