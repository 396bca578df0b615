import itertools
import random

import pytest

from avcurate.ambiguity import detect_spans
from avcurate.context import EMPTY_CONTEXT, VisualContext, extract_keywords
from avcurate.decoder import (
    REASON_LOWER,
    REASON_PRUNED,
    REASON_ZERO_CTX,
    ChoiceSegment,
    DecoderConfig,
    FixedSegment,
    LatticeCandidate,
    build_segments,
    decode,
    decode_segments,
    tune_weights,
)
from avcurate.ngram import AddKNgramModel, NGramModel
from avcurate.phonetics import g2p
from avcurate.textmetrics import AlignedText


class TableLM(NGramModel):
    """Order-1 stub with fixed per-token log-probs."""

    def __init__(self, table, default=-5.0):
        self.order = 1
        self.vocab = frozenset(table) | {"<unk>", "</s>"}
        self.table = table
        self.default = default

    def logp_token(self, token, history):
        return self.table.get(token, self.default)


def exhaustive_argmax(segments, lm, cfg):
    """Independent oracle: enumerate and score every lattice path."""
    choice_lists = [s.candidates for s in segments if isinstance(s, ChoiceSegment)]
    best = None
    for combo in itertools.product(*choice_lists):
        parts = []
        ci = 0
        ctx_sum = 0.0
        phon_sum = 0.0
        for seg in segments:
            if isinstance(seg, FixedSegment):
                parts.append(seg.text)
            else:
                parts.append(combo[ci].text)
                ctx_sum += combo[ci].ctx_score
                phon_sum += combo[ci].phon_bonus
                ci += 1
        text = "".join(parts)
        score = (cfg.lambda_lm * lm.sequence_logp(tuple(text), include_eos=True)
                 + cfg.lambda_ctx * ctx_sum + cfg.lambda_phon * phon_sum)
        key = (-score, text)
        if best is None or key < best:
            best = key
    return best[1], -best[0]


def random_lattice(rng, alphabet, max_spans=3, max_cands=4):
    segments = []
    n_spans = rng.randint(1, max_spans)
    for k in range(n_spans):
        segments.append(FixedSegment("".join(rng.choice(alphabet) for _ in range(rng.randint(1, 2)))))
        width = rng.randint(1, 2)
        texts = set()
        while len(texts) < rng.randint(2, max_cands):
            texts.add("".join(rng.choice(alphabet) for _ in range(width)))
        cands = tuple(
            LatticeCandidate(t, rng.choice([0.0, 0.0, 0.5, 1.0, 2.0]))
            for t in sorted(texts)
        )
        segments.append(ChoiceSegment(original=cands[0].text, candidates=cands))
    segments.append(FixedSegment(rng.choice(alphabet)))
    return segments


@pytest.fixture(scope="module")
def toy_lm():
    rng = random.Random(17)
    alphabet = "abcdefgh"
    corpus = ["".join(rng.choice(alphabet) for _ in range(rng.randint(4, 10))) for _ in range(60)]
    return AddKNgramModel.train(corpus, order=3, k=0.01)


class TestToyExamples:
    def test_two_candidate_arithmetic(self):
        lm = TableLM({"A": -1.0, "B": -1.2, "</s>": 0.0})
        seg = ChoiceSegment(
            original="A",
            candidates=(LatticeCandidate("A", 0.0), LatticeCandidate("B", 1.0)),
        )
        cfg = DecoderConfig(lambda_lm=1.0, lambda_ctx=0.5, beam_width=8)
        result = decode_segments([seg], lm, cfg)
        assert result.transcription == "B"
        dec = result.trace.decisions[0]
        totals = {c.text: c.total for c in dec.candidates}
        assert totals["A"] == pytest.approx(-1.0)
        assert totals["B"] == pytest.approx(-0.7)

    def test_empty_context_reduces_to_lm_argmax(self):
        lm = TableLM({"A": -1.0, "B": -1.2, "</s>": 0.0})
        seg = ChoiceSegment(
            original="A",
            candidates=(LatticeCandidate("A", 0.0), LatticeCandidate("B", 0.0)),
        )
        result = decode_segments([seg], lm, DecoderConfig())
        assert result.transcription == "A"

    def test_beam_width_validated(self):
        lm = TableLM({"A": -1.0})
        seg = ChoiceSegment(original="A", candidates=(LatticeCandidate("A", 0.0),))
        with pytest.raises(ValueError):
            decode_segments([seg], lm, DecoderConfig(beam_width=0))


class TestOracleEquivalence:
    def test_random_lattices_exact_with_wide_beam(self, toy_lm):
        rng = random.Random(99)
        cfg = DecoderConfig(beam_width=10_000)
        for _ in range(60):
            segments = random_lattice(rng, "abcdefgh")
            got = decode_segments(segments, toy_lm, cfg)
            want_text, want_score = exhaustive_argmax(segments, toy_lm, cfg)
            assert got.transcription == want_text
            assert got.total_score == pytest.approx(want_score, abs=1e-9)

    def test_narrow_beam_never_beats_oracle(self, toy_lm):
        rng = random.Random(7)
        cfg = DecoderConfig(beam_width=1)
        for _ in range(40):
            segments = random_lattice(rng, "abcdefgh")
            got = decode_segments(segments, toy_lm, cfg)
            _, want_score = exhaustive_argmax(segments, toy_lm, cfg)
            assert got.total_score <= want_score + 1e-9

    def test_beam_monotonicity(self, toy_lm):
        rng = random.Random(3)
        lattices = [random_lattice(rng, "abcdefgh") for _ in range(25)]
        for segments in lattices:
            prev = None
            for width in (1, 2, 4, 8, 32):
                score = decode_segments(segments, toy_lm, DecoderConfig(beam_width=width)).total_score
                if prev is not None:
                    assert score >= prev - 1e-9
                prev = score

    def test_scale_invariance(self, toy_lm):
        rng = random.Random(41)
        for _ in range(20):
            segments = random_lattice(rng, "abcdefgh")
            base = decode_segments(segments, toy_lm, DecoderConfig(lambda_lm=1.0, lambda_ctx=0.5))
            scaled = decode_segments(segments, toy_lm, DecoderConfig(lambda_lm=3.0, lambda_ctx=1.5))
            assert base.transcription == scaled.transcription


class TestLexiconDecoding:
    def test_caption_steers_homophone_choice(self, lex, lm):
        text = "今天我们讨论和议的问题"
        pa = g2p(text, lex)
        other = AlignedText(tuple("今天我们讨论合意的问题"), "今天我们讨论合意的问题")
        spans = detect_spans(pa, lex, other)

        contract = extract_keywords(caption="桌上放着合同文件等待合意")
        res = decode(pa, spans, contract, lm, lex)
        assert res.transcription == "今天我们讨论合意的问题"

        talks = extract_keywords(caption="双方代表坐下来和谈共商和议")
        res = decode(pa, spans, talks, lm, lex)
        assert res.transcription == "今天我们讨论和议的问题"

        # decode must equal the exhaustive argmax over the same lattice
        cfg = DecoderConfig()
        segments = build_segments(pa, spans, talks, lex, cfg)
        want_text, _ = exhaustive_argmax(segments, lm, cfg)
        assert res.transcription == want_text

    def test_chosen_is_argmax_of_listed(self, lex, lm):
        pa = g2p("今天我们讨论和议的问题", lex)
        spans = detect_spans(pa, lex)
        ctx = extract_keywords(caption="画面里有和议")
        res = decode(pa, spans, ctx, lm, lex)
        for dec in res.trace.decisions:
            best = min(dec.candidates, key=lambda c: (-c.total, c.text))
            assert dec.chosen == best.text

    def test_every_candidate_chosen_or_eliminated(self, lex, lm):
        pa = g2p("今天我们讨论和议的问题", lex)
        spans = detect_spans(pa, lex)
        res = decode(pa, spans, EMPTY_CONTEXT, lm, lex)
        for dec, elim in zip(res.trace.decisions, res.trace.eliminated):
            listed = sorted(c.text for c in dec.candidates)
            accounted = sorted([dec.chosen] + [c for c, _ in elim])
            assert listed == accounted
            for _, reason in elim:
                assert reason in (REASON_LOWER, REASON_ZERO_CTX, REASON_PRUNED)

    def test_span_without_candidates_falls_back(self, lex, lm):
        from avcurate.ambiguity import AmbiguousSpan, Trigger

        text = "今天我们讨论和议的问题"
        pa = g2p(text, lex)
        # five syllables exceed the decoder's max span: no candidates
        span = AmbiguousSpan((2, 7), (2, 7), Trigger.HOMOPHONE_DENSITY, 3)
        res = decode(pa, [span], EMPTY_CONTEXT, lm, lex)
        assert res.transcription == text
        assert res.trace.decisions[0].fallback

    def test_overlapping_spans_rejected(self, lex, lm):
        from avcurate.ambiguity import AmbiguousSpan, Trigger

        pa = g2p("和议合意", lex)
        spans = [
            AmbiguousSpan((0, 2), (0, 2), Trigger.HOMOPHONE_DENSITY, 3),
            AmbiguousSpan((1, 3), (1, 3), Trigger.HOMOPHONE_DENSITY, 3),
        ]
        with pytest.raises(ValueError, match="overlap"):
            decode(pa, spans, EMPTY_CONTEXT, lm, lex)


class TestTuneWeights:
    def _dev_set(self, lm):
        seg_a = ChoiceSegment(
            original="A",
            candidates=(LatticeCandidate("A", 0.0), LatticeCandidate("B", 1.0)),
        )
        return [([seg_a], "B")]

    def test_grid_containing_optimum(self):
        lm = TableLM({"A": -1.0, "B": -1.2, "</s>": 0.0})
        dev = self._dev_set(lm)
        lam_lm, lam_ctx, best = tune_weights(dev, lm, [1.0], [0.0, 0.5], DecoderConfig())
        assert (lam_lm, lam_ctx) == (1.0, 0.5)
        assert best == 0.0

    def test_context_never_helps_prefers_smallest_ctx(self):
        lm = TableLM({"A": -1.0, "B": -1.2, "</s>": 0.0})
        seg = ChoiceSegment(
            original="A",
            candidates=(LatticeCandidate("A", 0.0), LatticeCandidate("B", 0.0)),
        )
        dev = [([seg], "A")]
        lam_lm, lam_ctx, best = tune_weights(dev, lm, [1.0, 2.0], [0.0, 0.5, 1.0], DecoderConfig())
        assert lam_ctx == 0.0
        assert lam_lm == 1.0
        assert best == 0.0

    def test_single_point_grid(self):
        lm = TableLM({"A": -1.0, "B": -1.2, "</s>": 0.0})
        dev = self._dev_set(lm)
        assert tune_weights(dev, lm, [2.0], [0.25], DecoderConfig())[:2] == (2.0, 0.25)

    def test_empty_grid_rejected(self):
        lm = TableLM({"A": -1.0})
        with pytest.raises(ValueError):
            tune_weights(self._dev_set(lm), lm, [], [0.5], DecoderConfig())
