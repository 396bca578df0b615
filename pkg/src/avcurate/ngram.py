"""Character n-gram language models: count-trained and ARPA-loaded.

Both models expose natural-log token probabilities over a vocabulary with
a distinguished unknown token, and guarantee that the next-token
distribution for any context sums to 1.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Sequence

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

_LN10 = math.log(10.0)


class NGramModel:
    """Shared scoring interface; subclasses define logp_token."""

    order: int
    vocab: frozenset[str]

    def logp_token(self, token: str, history: tuple[str, ...]) -> float:
        raise NotImplementedError

    def map_token(self, token: str) -> str:
        return token if token in self.vocab else UNK

    def start_history(self) -> tuple[str, ...]:
        return (BOS,) * (self.order - 1)

    def _advance(self, history: tuple[str, ...], token: str) -> tuple[str, ...]:
        if self.order == 1:
            return ()
        return (history + (token,))[-(self.order - 1):]

    def sequence_logp(
        self,
        tokens: Sequence[str],
        history: tuple[str, ...] | None = None,
        include_eos: bool = True,
    ) -> float:
        """Natural-log probability of a token sequence.

        ``history`` primes the context window (defaults to sentence start);
        the empty sequence without EOS scores exactly 0.
        """
        if history is None:
            hist = self.start_history()
        else:
            mapped = tuple(t if t == BOS else self.map_token(t) for t in history)
            hist = mapped[-(self.order - 1):] if self.order > 1 else ()
        total = 0.0
        for tok in tokens:
            m = self.map_token(tok)
            total += self.logp_token(m, hist)
            hist = self._advance(hist, m)
        if include_eos:
            total += self.logp_token(EOS, hist)
        return total

    def score_text(self, text: str, conditioning: str = "", include_eos: bool = True) -> float:
        hist = tuple(conditioning) if conditioning else None
        return self.sequence_logp(tuple(text), history=hist, include_eos=include_eos)

    def next_token_distribution(self, history: tuple[str, ...]) -> dict[str, float]:
        mapped = tuple(t if t == BOS else self.map_token(t) for t in history)
        hist = mapped[-(self.order - 1):] if self.order > 1 else ()
        return {tok: math.exp(self.logp_token(tok, hist)) for tok in sorted(self.vocab)}


class AddKNgramModel(NGramModel):
    """Count-based model with add-k smoothing.

    Scoring uses the longest context with nonzero count, falling back to
    shorter contexts; at each level the add-k conditional is exactly
    normalized over the vocabulary, so backoff preserves normalization.
    """

    def __init__(self, order: int, k: float, counts, totals, vocab: frozenset[str]):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.order = order
        self.k = k
        self._counts = counts
        self._totals = totals
        self.vocab = vocab

    @classmethod
    def train(cls, texts: Iterable[str], order: int = 3, k: float = 0.01) -> "AddKNgramModel":
        if order < 1:
            raise ValueError("order must be >= 1")
        counts: list[dict[tuple[str, ...], dict[str, int]]] = [dict() for _ in range(order)]
        totals: list[dict[tuple[str, ...], int]] = [dict() for _ in range(order)]
        vocab: set[str] = {UNK, EOS}
        n_sentences = 0
        for text in texts:
            n_sentences += 1
            tokens = list(text) + [EOS]
            vocab.update(tokens)
            hist = [BOS] * (order - 1)
            for tok in tokens:
                for n in range(1, order + 1):
                    ctx = tuple(hist[len(hist) - (n - 1):]) if n > 1 else ()
                    bucket = counts[n - 1].setdefault(ctx, {})
                    bucket[tok] = bucket.get(tok, 0) + 1
                    totals[n - 1][ctx] = totals[n - 1].get(ctx, 0) + 1
                hist.append(tok)
                if order > 1:
                    hist = hist[-(order - 1):]
        if n_sentences == 0:
            raise ValueError("cannot train on an empty corpus")
        return cls(order, k, counts, totals, frozenset(vocab))

    def logp_token(self, token: str, history: tuple[str, ...]) -> float:
        v = len(self.vocab)
        for n in range(min(self.order, len(history) + 1), 0, -1):
            ctx = history[len(history) - (n - 1):] if n > 1 else ()
            total = self._totals[n - 1].get(ctx)
            if total:
                count = self._counts[n - 1][ctx].get(token, 0)
                return math.log((count + self.k) / (total + self.k * v))
        # unreachable after training: the unigram context always has counts
        raise RuntimeError("model has no unigram counts")

    def seen_contexts(self, n: int) -> list[tuple[str, ...]]:
        return sorted(self._totals[n - 1])


class ArpaNgramModel(NGramModel):
    """Backoff model loaded from an ARPA-format table (log10 in the file)."""

    def __init__(self, order: int, logps, backoffs, vocab: frozenset[str]):
        self.order = order
        self._logps = logps
        self._backoffs = backoffs
        self.vocab = vocab

    @classmethod
    def load(cls, path: str | Path) -> "ArpaNgramModel":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def parse(cls, text: str) -> "ArpaNgramModel":
        lines = text.splitlines()
        i = 0
        declared: dict[int, int] = {}
        while i < len(lines) and lines[i].strip() != "\\data\\":
            i += 1
        if i == len(lines):
            raise ValueError("not an ARPA file: missing \\data\\ header")
        i += 1
        while i < len(lines):
            line = lines[i].strip()
            if not line:
                i += 1
                continue
            if line.startswith("ngram "):
                spec, _, count = line[len("ngram "):].partition("=")
                declared[int(spec)] = int(count)
                i += 1
            else:
                break
        if not declared:
            raise ValueError("ARPA file declares no n-gram orders")
        order = max(declared)
        logps: list[dict[tuple[str, ...], float]] = [dict() for _ in range(order)]
        backoffs: dict[tuple[str, ...], float] = {}
        current = 0
        while i < len(lines):
            line = lines[i].strip()
            i += 1
            if not line:
                continue
            if line == "\\end\\":
                break
            m = line.startswith("\\") and line.endswith("-grams:")
            if m:
                current = int(line[1:line.index("-")])
                continue
            if current == 0:
                raise ValueError(f"ARPA entry outside any n-gram section: {line!r}")
            fields = line.split()
            if len(fields) == current + 1:
                lp, toks, bow = float(fields[0]), tuple(fields[1:]), None
            elif len(fields) == current + 2:
                lp, toks, bow = float(fields[0]), tuple(fields[1:-1]), float(fields[-1])
            else:
                raise ValueError(f"malformed {current}-gram line: {line!r}")
            logps[current - 1][toks] = lp * _LN10
            if bow is not None:
                backoffs[toks] = bow * _LN10
        vocab = {tok for (tok,) in logps[0]} - {BOS}
        vocab.update({UNK, EOS})
        for n, expected in declared.items():
            if len(logps[n - 1]) != expected:
                raise ValueError(
                    f"ARPA header declares {expected} {n}-grams, found {len(logps[n - 1])}"
                )
        return cls(order, logps, backoffs, frozenset(vocab))

    def logp_token(self, token: str, history: tuple[str, ...]) -> float:
        ctx = history[-(self.order - 1):] if self.order > 1 else ()
        return self._backoff_logp(token, tuple(ctx))

    def _backoff_logp(self, token: str, ctx: tuple[str, ...]) -> float:
        entry = self._logps[len(ctx)].get(ctx + (token,))
        if entry is not None:
            return entry
        if not ctx:
            # unigram table must cover the vocabulary; fall back to <unk>
            unk = self._logps[0].get((UNK,))
            if unk is None:
                raise ValueError(f"token {token!r} missing from unigrams and no <unk>")
            return unk
        bow = self._backoffs.get(ctx, 0.0)
        return bow + self._backoff_logp(token, ctx[1:])


def write_arpa(model: AddKNgramModel, path: str | Path) -> None:
    """Export a count model as an exactly-normalized ARPA backoff table.

    Only observed n-grams are listed; backoff weights are computed so each
    context's next-token distribution still sums to 1.
    """
    order = model.order
    vocab = sorted(model.vocab)
    v = len(vocab)
    k = model.k

    def level_prob(n: int, ctx: tuple[str, ...], tok: str) -> float:
        total = model._totals[n - 1][ctx]
        count = model._counts[n - 1][ctx].get(tok, 0)
        return (count + k) / (total + k * v)

    logps: list[dict[tuple[str, ...], float]] = [dict() for _ in range(order)]
    backoffs: dict[tuple[str, ...], float] = {}

    for tok in vocab:
        logps[0][(tok,)] = math.log(level_prob(1, (), tok))
    logps[0][(BOS,)] = -99 * _LN10

    def built_logp(tok: str, ctx: tuple[str, ...]) -> float:
        entry = logps[len(ctx)].get(ctx + (tok,))
        if entry is not None:
            return entry
        bow = backoffs.get(ctx, 0.0)
        return bow + built_logp(tok, ctx[1:])

    for n in range(2, order + 1):
        for ctx in sorted(model._counts[n - 1]):
            seen = sorted(model._counts[n - 1][ctx])
            probs = {tok: level_prob(n, ctx, tok) for tok in seen}
            listed_mass = sum(probs.values())
            lower_mass = sum(math.exp(built_logp(tok, ctx[1:])) for tok in seen)
            if 1.0 - lower_mass <= 0.0:
                bow = 1.0
            else:
                bow = (1.0 - listed_mass) / (1.0 - lower_mass)
            backoffs[ctx] = math.log(bow) if bow > 0 else -99 * _LN10
            for tok, p in probs.items():
                logps[n - 1][ctx + (tok,)] = math.log(p)

    # a context can only carry its backoff weight on its own n-gram line
    for ctx in backoffs:
        logps[len(ctx) - 1].setdefault(ctx, -99 * _LN10)

    out: list[str] = ["\\data\\"]
    for n in range(1, order + 1):
        out.append(f"ngram {n}={len(logps[n - 1])}")
    for n in range(1, order + 1):
        out.append("")
        out.append(f"\\{n}-grams:")
        for toks in sorted(logps[n - 1]):
            lp10 = logps[n - 1][toks] / _LN10
            line = f"{lp10:.8f}\t{' '.join(toks)}"
            if n < order and toks in backoffs:
                line += f"\t{backoffs[toks] / _LN10:.8f}"
            out.append(line)
    out.append("")
    out.append("\\end\\")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
