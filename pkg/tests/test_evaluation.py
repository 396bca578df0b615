import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avcurate.decoder import DecoderConfig, decode, replace
from avcurate.ambiguity import detect_spans
from avcurate.context import extract_keywords
from avcurate.evaluation import (
    _derangement,
    ablate,
    evaluate,
    evaluate_outputs,
    format_table,
)
from avcurate.phonetics import g2p
from avcurate.pipeline import DEFAULT_PIPELINE, SampleManifest
from avcurate.synth import synth_corpus
from avcurate.textmetrics import normalize


@pytest.fixture(scope="module")
def planted(lex):
    rows = synth_corpus(seed=5, size=40, lex=lex)
    return [SampleManifest.from_dict(r) for r in rows]


class TestEvaluateOutputs:
    def test_identity_zero(self):
        result = evaluate_outputs({"a": "今天好"}, {"a": "今天好"})
        assert result.cer == 0.0

    def test_missing_reference_warned_and_excluded(self):
        result = evaluate_outputs({"a": "今天好", "b": "另一句"}, {"a": "今天好"})
        assert result.missing == ("b",)
        assert result.scored == 1
        assert result.cer == 0.0

    def test_pooled_cer(self):
        result = evaluate_outputs({"a": "今天", "b": "天气预报"}, {"a": "今天", "b": "天气预告"})
        assert result.cer == 1 / 6

    def test_all_missing_rejected(self):
        with pytest.raises(ValueError):
            evaluate_outputs({"a": "x"}, {})

    def test_permutation_invariance(self):
        outs1 = {"a": "今天", "b": "天气好", "c": "不好"}
        refs = {"a": "今日", "b": "天气好", "c": "很好"}
        r1 = evaluate_outputs(outs1, refs)
        r2 = evaluate_outputs(dict(reversed(list(outs1.items()))), refs)
        assert r1 == r2

    def test_table_formatting(self):
        results = evaluate({"one": {"a": "x"}}, {"a": "x"})
        table = format_table(results)
        assert "one" in table and "CER" in table


class TestDerangement:
    @given(st.integers(2, 40), st.integers(0, 10 ** 6))
    @settings(max_examples=200)
    def test_no_fixed_points(self, n, seed):
        perm = _derangement(n, seed)
        assert sorted(perm) == list(range(n))
        assert all(perm[i] != i for i in range(n))

    def test_deterministic(self):
        assert _derangement(10, 4) == _derangement(10, 4)


class TestAblate:
    def test_condition_ordering_on_planted_corpus(self, planted, lex, lm):
        result = ablate(planted, lex, lm, seed=1)
        full = result.results["full_context"].cer
        empty = result.results["empty_context"].cer
        shuffled = result.results["shuffled_context"].cer
        assert full < empty
        assert empty - full >= 0.05
        assert shuffled >= full

    def test_empty_condition_equals_lambda_zero(self, planted, lex, lm):
        result = ablate(planted[:12], lex, lm, seed=2)
        cfg = DEFAULT_PIPELINE
        zero = replace(cfg.decoder, lambda_ctx=0.0)
        for s in planted[:12]:
            pa = g2p(normalize(s.asr_hyp_primary, cfg.text_normalize).text, lex)
            other = normalize(s.asr_hyp_secondary, cfg.text_normalize)
            spans = detect_spans(pa, lex, other)
            ctx = extract_keywords(
                subtitle_text=" ".join(s.ocr_subtitles) or None,
                background_text=s.ocr_background,
                caption=s.caption or None,
            )
            lam0 = decode(pa, spans, ctx, lm, lex, zero).transcription
            assert result.outputs["empty_context"][s.sample_id] == lam0

    def test_seed_determinism(self, planted, lex, lm):
        a = ablate(planted[:10], lex, lm, seed=3)
        b = ablate(planted[:10], lex, lm, seed=3)
        assert a.outputs == b.outputs

    def test_too_few_samples(self, planted, lex, lm):
        with pytest.raises(ValueError, match="at least 2"):
            ablate(planted[:1], lex, lm)

    def test_missing_gold_rejected(self, planted, lex, lm):
        broken = [SampleManifest.from_dict({
            "sample_id": "x", "asr_hyp_primary": "a", "asr_hyp_secondary": "b",
        })] + planted[:2]
        with pytest.raises(ValueError, match="gold"):
            ablate(broken, lex, lm)
