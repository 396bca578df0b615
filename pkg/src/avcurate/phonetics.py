"""Mandarin grapheme-to-phoneme conversion and homophone candidate sets.

The lexicon is a plain-text asset (characters, words, frequency weights),
not a hard-coded table, so desk-scale tests can ship a miniature one.
"""

from __future__ import annotations

import heapq
import unicodedata
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

# Initials sorted longest-first so zh/ch/sh win over z/c/s/h.
_INITIALS = ("zh", "ch", "sh", "b", "p", "m", "f", "d", "t", "n", "l",
             "g", "k", "h", "j", "q", "x", "r", "z", "c", "s", "y", "w", "")

# Finals in lexicon orthography; u-umlaut is romanized as 'v' (lv, nv).
_FINALS = frozenset([
    "a", "o", "e", "i", "u", "v",
    "ai", "ei", "ui", "ao", "ou", "iu", "ie", "ve", "ue", "er",
    "an", "en", "in", "un", "vn",
    "ang", "eng", "ing", "ong",
    "ia", "iao", "ian", "iang", "iong",
    "ua", "uo", "uai", "uan", "uang",
])

_TONE_COMBINING = {"̄": 1, "́": 2, "̌": 3, "̀": 4}
_COMBINING_BY_TONE = {v: k for k, v in _TONE_COMBINING.items()}
_DIAERESIS = "̈"
_VOWELS = "aeiouv"


def is_legal_base(base: str) -> bool:
    """Structural check: optional initial + legal final, ASCII letters only."""
    if not base or not all("a" <= c <= "z" for c in base):
        return False
    for ini in _INITIALS:
        if base.startswith(ini) and base[len(ini):] in _FINALS:
            return True
    return False


def is_han(ch: str) -> bool:
    cp = ord(ch)
    return 0x4E00 <= cp <= 0x9FFF or 0x3400 <= cp <= 0x4DBF


class SyllableError(ValueError):
    pass


@dataclass(frozen=True)
class Syllable:
    """One Mandarin syllable: toneless ASCII base plus tone 0-4 (0 = neutral)."""

    base: str
    tone: int

    def __post_init__(self):
        if not is_legal_base(self.base):
            raise SyllableError(f"illegal syllable {self.base!r}")
        if self.tone not in range(5):
            raise SyllableError(f"illegal tone {self.tone!r}")

    @property
    def display(self) -> str:
        """Tone-marked form, e.g. ('he', 2) -> 'hé'."""
        vis = self.base.replace("v", "u" + _DIAERESIS)
        if self.tone == 0:
            return unicodedata.normalize("NFC", vis)
        if "a" in vis:
            pos = vis.index("a")
        elif "e" in vis:
            pos = vis.index("e")
        elif "ou" in vis:
            pos = vis.index("o")
        else:
            pos = max(i for i, c in enumerate(vis) if c in "aeiou")
            if pos + 1 < len(vis) and vis[pos + 1] == _DIAERESIS:
                pos += 1
        marked = vis[: pos + 1] + _COMBINING_BY_TONE[self.tone] + vis[pos + 1:]
        return unicodedata.normalize("NFC", marked)

    def key(self, tone_mode: "ToneMode") -> str | tuple[str, int]:
        return self.base if tone_mode is ToneMode.TONELESS else (self.base, self.tone)

    @classmethod
    def parse(cls, text: str) -> "Syllable":
        """Parse either tone-marked ('hé', 'lǜ') or numeric ('he2', 'lv4') form."""
        s = text.strip().lower()
        if not s:
            raise SyllableError("empty syllable")
        if s[-1].isdigit():
            return cls(base=s[:-1], tone=int(s[-1]))
        tone = 0
        letters: list[str] = []
        for ch in unicodedata.normalize("NFD", s):
            if ch in _TONE_COMBINING:
                if tone:
                    raise SyllableError(f"multiple tone marks in {text!r}")
                tone = _TONE_COMBINING[ch]
            else:
                letters.append(ch)
        base = "".join(letters).replace("u" + _DIAERESIS, "v")
        return cls(base=base, tone=tone)


class ToneMode(str, Enum):
    STRICT = "strict"
    TONELESS = "toneless"


@dataclass(frozen=True)
class PhoneToken:
    """One source character with its reading; non-Han chars pass through."""

    text: str
    start: int
    end: int
    syllable: Syllable | None
    oov: bool = False


@dataclass(frozen=True)
class PhoneticSequence:
    tokens: tuple[PhoneToken, ...]
    source_text: str

    @property
    def syllables(self) -> list[Syllable]:
        return [t.syllable for t in self.tokens if t.syllable is not None]

    @property
    def char_spans(self) -> list[tuple[int, int]]:
        return [(t.start, t.end) for t in self.tokens]

    def render_text(self) -> str:
        return " ".join(t.syllable.display if t.syllable else t.text for t in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


class LexiconError(ValueError):
    pass


@dataclass
class Lexicon:
    """Character and word pronunciation tables with inverted homophone indexes."""

    entries: dict[str, list[tuple[Syllable, float]]]
    word_entries: dict[str, tuple[tuple[Syllable, ...], float]]
    char_index_strict: dict[tuple[str, int], list[tuple[str, float]]]
    char_index_toneless: dict[str, list[tuple[str, float]]]
    word_index_strict: dict[tuple[tuple[str, int], ...], list[tuple[str, float]]]
    word_index_toneless: dict[tuple[str, ...], list[tuple[str, float]]]
    max_word_len: int

    def char_candidates(self, syl: Syllable, tone_mode: ToneMode) -> list[tuple[str, float]]:
        if tone_mode is ToneMode.TONELESS:
            return self.char_index_toneless.get(syl.base, [])
        return self.char_index_strict.get((syl.base, syl.tone), [])

    def word_candidates(self, span: Sequence[Syllable], tone_mode: ToneMode) -> list[tuple[str, float]]:
        if tone_mode is ToneMode.TONELESS:
            return self.word_index_toneless.get(tuple(s.base for s in span), [])
        return self.word_index_strict.get(tuple((s.base, s.tone) for s in span), [])


def _sorted_desc(items: Iterable[tuple[str, float]]) -> list[tuple[str, float]]:
    return sorted(items, key=lambda kv: (-kv[1], kv[0]))


def load_lexicon(path: str | Path) -> Lexicon:
    return parse_lexicon(Path(path).read_text(encoding="utf-8"))


def parse_lexicon(text: str) -> Lexicon:
    """Parse the TSV lexicon format.

    Rows are ``char<TAB>pinyin<TAB>weight`` or
    ``word<TAB>space-separated syllables<TAB>weight``; '#' starts a comment.
    Duplicate (entry, reading) rows merge by summing weights.
    """
    char_acc: dict[tuple[str, str, int], float] = {}
    word_acc: dict[str, tuple[tuple[Syllable, ...], float]] = {}
    rows = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise LexiconError(f"line {lineno}: expected 3 tab-separated fields, got {len(fields)}")
        head, reading, weight_s = (f.strip() for f in fields)
        try:
            weight = float(weight_s)
        except ValueError:
            raise LexiconError(f"line {lineno}: bad weight {weight_s!r}") from None
        if weight <= 0:
            raise LexiconError(f"line {lineno}: weight must be positive, got {weight_s}")
        try:
            syls = tuple(Syllable.parse(p) for p in reading.split())
        except SyllableError as exc:
            raise LexiconError(f"line {lineno}: {exc}") from None
        if len(head) == 1:
            if len(syls) != 1:
                raise LexiconError(f"line {lineno}: single character needs one syllable")
            key = (head, syls[0].base, syls[0].tone)
            char_acc[key] = char_acc.get(key, 0.0) + weight
        else:
            if len(syls) != len(head):
                raise LexiconError(
                    f"line {lineno}: word {head!r} has {len(head)} characters "
                    f"but {len(syls)} syllables"
                )
            prev = word_acc.get(head)
            if prev is None:
                word_acc[head] = (syls, weight)
            elif prev[0] == syls:
                word_acc[head] = (syls, prev[1] + weight)
            else:
                raise LexiconError(f"line {lineno}: conflicting reading for word {head!r}")
        rows += 1
    if rows == 0:
        raise LexiconError("empty lexicon")

    entries: dict[str, list[tuple[Syllable, float]]] = {}
    strict: dict[tuple[str, int], list[tuple[str, float]]] = {}
    toneless: dict[str, dict[str, float]] = {}
    for (char, base, tone), weight in char_acc.items():
        entries.setdefault(char, []).append((Syllable(base, tone), weight))
        strict.setdefault((base, tone), []).append((char, weight))
        toneless.setdefault(base, {})
        toneless[base][char] = toneless[base].get(char, 0.0) + weight
    for char in entries:
        entries[char].sort(key=lambda sw: (-sw[1], sw[0].base, sw[0].tone))
    for key in strict:
        strict[key] = _sorted_desc(strict[key])

    word_strict: dict[tuple[tuple[str, int], ...], list[tuple[str, float]]] = {}
    word_toneless: dict[tuple[str, ...], list[tuple[str, float]]] = {}
    for word, (syls, weight) in word_acc.items():
        word_strict.setdefault(tuple((s.base, s.tone) for s in syls), []).append((word, weight))
        word_toneless.setdefault(tuple(s.base for s in syls), []).append((word, weight))
    for key in word_strict:
        word_strict[key] = _sorted_desc(word_strict[key])
    for key2 in word_toneless:
        word_toneless[key2] = _sorted_desc(word_toneless[key2])

    return Lexicon(
        entries=entries,
        word_entries=word_acc,
        char_index_strict=strict,
        char_index_toneless={b: _sorted_desc(d.items()) for b, d in toneless.items()},
        word_index_strict=word_strict,
        word_index_toneless=word_toneless,
        max_word_len=max((len(w) for w in word_acc), default=1),
    )


def g2p(text: str, lex: Lexicon) -> PhoneticSequence:
    """Convert text to its phonetic sequence.

    Longest-match word lookup first, then per-character most-frequent
    reading; non-Han and out-of-lexicon characters pass through.
    """
    tokens: list[PhoneToken] = []
    i = 0
    n = len(text)
    while i < n:
        matched = False
        for length in range(min(lex.max_word_len, n - i), 1, -1):
            chunk = text[i:i + length]
            entry = lex.word_entries.get(chunk)
            if entry is not None:
                syls = entry[0]
                for k, ch in enumerate(chunk):
                    tokens.append(PhoneToken(ch, i + k, i + k + 1, syls[k]))
                i += length
                matched = True
                break
        if matched:
            continue
        ch = text[i]
        readings = lex.entries.get(ch)
        if readings:
            tokens.append(PhoneToken(ch, i, i + 1, readings[0][0]))
        else:
            tokens.append(PhoneToken(ch, i, i + 1, None, oov=is_han(ch)))
        i += 1
    return PhoneticSequence(tokens=tuple(tokens), source_text=text)


def homophones(
    span: Sequence[Syllable],
    lex: Lexicon,
    tone_mode: ToneMode = ToneMode.STRICT,
    max_span: int = 4,
    branch_cap: int = 50,
    include_composed: bool = True,
) -> list[tuple[str, float]]:
    """Ranked character strings sharing the span's pronunciation.

    Candidates are matching lexicon words plus per-character compositions
    (best-first, capped at branch_cap); ranked by weight product with
    lexicographic tie-break.
    """
    if not span:
        raise ValueError("empty span")
    if len(span) > max_span:
        raise ValueError(f"span length {len(span)} exceeds max {max_span}")

    scored: dict[str, float] = {}
    for word, weight in lex.word_candidates(span, tone_mode):
        scored[word] = max(scored.get(word, 0.0), weight)

    if include_composed:
        per_slot = [lex.char_candidates(s, tone_mode) for s in span]
        if all(per_slot):
            for text, weight in _best_products(per_slot, branch_cap):
                scored[text] = max(scored.get(text, 0.0), weight)

    return _sorted_desc(scored.items())


def _best_products(slots: list[list[tuple[str, float]]], cap: int) -> list[tuple[str, float]]:
    """Best-first Cartesian composition over weight products (lazy k-best)."""
    first = tuple(0 for _ in slots)

    def item(idx: tuple[int, ...]) -> tuple[float, str]:
        w = 1.0
        chars = []
        for slot, k in zip(slots, idx):
            ch, cw = slot[k]
            chars.append(ch)
            w *= cw
        return w, "".join(chars)

    w0, t0 = item(first)
    heap: list[tuple[float, str, tuple[int, ...]]] = [(-w0, t0, first)]
    seen = {first}
    out: list[tuple[str, float]] = []
    while heap and len(out) < cap:
        negw, text, idx = heapq.heappop(heap)
        out.append((text, -negw))
        for pos in range(len(slots)):
            if idx[pos] + 1 < len(slots[pos]):
                nxt = idx[:pos] + (idx[pos] + 1,) + idx[pos + 1:]
                if nxt not in seen:
                    seen.add(nxt)
                    w, t = item(nxt)
                    heapq.heappush(heap, (-w, t, nxt))
    return out
