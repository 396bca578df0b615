import io
import json

import pytest

from avcurate import pipeline as pl
from avcurate.ambiguity import SuitabilityResult, detect_spans
from avcurate.assets import manifest_path
from avcurate.context import EMPTY_CONTEXT, extract_keywords
from avcurate.decoder import DecoderConfig, decode, replace
from avcurate.ngram import AddKNgramModel
from avcurate.phonetics import g2p
from avcurate.pipeline import (
    DEFAULT_PIPELINE,
    AnnotatorClient,
    HttpAnnotatorClient,
    ManifestError,
    SampleManifest,
    load_manifest,
    run,
    write_records,
)
from avcurate.records import deserialize, serialize, validate_record
from avcurate.synth import lm_training_corpus, plantable_clusters, synth_corpus
from avcurate.textmetrics import GateDecision, cer, filter_gate, normalize


def row(sample_id, hyp1, hyp2, caption="", background=(), gold=None):
    return {
        "sample_id": sample_id,
        "audio_ref": f"audio/{sample_id}.wav",
        "video_ref": f"video/{sample_id}.mp4",
        "asr_hyp_primary": hyp1,
        "asr_hyp_secondary": hyp2,
        "ocr": {"subtitles": [], "background": list(background)},
        "caption": caption,
        "gold_transcript": gold,
    }


class TestManifest:
    def test_load_fixture(self):
        samples = load_manifest(manifest_path())
        assert len(samples) == 20
        assert all(s.asr_hyp_primary and s.asr_hyp_secondary for s in samples)

    def test_bad_json_line_aborts_with_position(self, tmp_path):
        p = tmp_path / "m.jsonl"
        p.write_text('{"sample_id": "a", "asr_hyp_primary": "x", "asr_hyp_secondary": "y"}\n{oops\n')
        with pytest.raises(ManifestError, match="line 2"):
            load_manifest(p)

    def test_missing_hypothesis_aborts(self, tmp_path):
        p = tmp_path / "m.jsonl"
        p.write_text('{"sample_id": "a", "asr_hyp_primary": "x"}\n')
        with pytest.raises(ManifestError, match="asr_hyp_secondary"):
            load_manifest(p)

    def test_duplicate_id_aborts(self, tmp_path):
        p = tmp_path / "m.jsonl"
        line = '{"sample_id": "a", "asr_hyp_primary": "x", "asr_hyp_secondary": "y"}\n'
        p.write_text(line + line)
        with pytest.raises(ManifestError, match="duplicate"):
            load_manifest(p)


class TestRun:
    def test_identical_hypotheses_discarded_trivial(self, lex, lm):
        samples = [SampleManifest.from_dict(row("s1", "今天天气很好", "今天天气很好"))]
        records, report = run(samples, lex, lm)
        assert records == []
        assert report.gate_counts["discard_trivial"] == 1

    def test_noisy_pair_discarded(self, lex, lm):
        samples = [SampleManifest.from_dict(row("s1", "完全无关的另外一句话啊", "今天好"))]
        records, report = run(samples, lex, lm)
        assert records == []
        assert report.gate_counts["discard_noisy"] == 1

    def test_retained_sample_yields_valid_record(self, lex, lm):
        samples = [SampleManifest.from_dict(row(
            "s1", "今天我们讨论和议的问题", "今天我们讨论合意的问题",
            caption="桌上放着合同文件等待合意",
        ))]
        records, report = run(samples, lex, lm)
        assert report.gate_counts["retain"] == 1
        assert len(records) == 1
        rec = records[0]
        assert validate_record(rec) == []
        assert rec.transcription == "今天我们讨论合意的问题"
        assert rec.provenance.gate_decision == "retain"
        assert rec.chain_scores is not None

    def test_gate_matches_standalone_filter(self, lex, lm):
        samples = load_manifest(manifest_path())
        _, report = run(samples, lex, lm)
        counts = {d.value: 0 for d in GateDecision}
        for s in samples:
            rep = cer(
                normalize(s.asr_hyp_primary, DEFAULT_PIPELINE.gate_normalize),
                normalize(s.asr_hyp_secondary, DEFAULT_PIPELINE.gate_normalize),
            )
            counts[filter_gate(rep).value] += 1
        for key, val in counts.items():
            assert report.gate_counts[key] == val

    def test_counts_partition_input(self, lex, lm):
        samples = load_manifest(manifest_path())
        samples.append(SampleManifest.from_dict(row("zz-same", "同一句话", "同一句话")))
        _, report = run(samples, lex, lm)
        assert sum(report.gate_counts.values()) == report.input_count == len(samples)
        assert len(report.emitted_ids) + len(report.skipped) + \
            report.gate_counts["discard_trivial"] + report.gate_counts["discard_noisy"] == len(samples)

    def test_unsuitable_sample_skipped(self, lex, lm):
        # retained by the gate but no ambiguous spans: plain-text hyps
        samples = [SampleManifest.from_dict(row("s1", "今天天气很好", "今天天气很坏"))]
        records, report = run(samples, lex, lm)
        assert records == []
        assert report.gate_counts["retain"] == 1
        assert report.skipped and "unsuitable" in report.skipped[0][1]

    def test_per_sample_isolation(self, lex, lm, monkeypatch):
        good = row("a-good", "今天我们讨论和议的问题", "今天我们讨论合意的问题", caption="画面里有和议")
        bad = row("b-bad", "他到机场去了啊", "他到鸡场去了哦")
        samples = [SampleManifest.from_dict(r) for r in (good, bad)]

        real_decode = pl.decode

        def exploding(pa, spans, ctx, lm_, lex_, cfg):
            if pa.source_text.startswith("他到"):
                raise RuntimeError("boom")
            return real_decode(pa, spans, ctx, lm_, lex_, cfg)

        monkeypatch.setattr(pl, "decode", exploding)
        records, report = run(samples, lex, lm)
        assert [r.sample_id for r in records] == ["a-good"]
        assert any(sid == "b-bad" and "boom" in reason for sid, reason in report.skipped)

    def test_offline_determinism(self, lex, lm):
        samples = load_manifest(manifest_path())
        rec1, _ = run(samples, lex, lm)
        rec2, _ = run(samples, lex, lm)
        assert [serialize(r) for r in rec1] == [serialize(r) for r in rec2]

    def test_parallel_matches_serial(self, lex, lm):
        samples = load_manifest(manifest_path())
        rec1, _ = run(samples, lex, lm, jobs=1)
        rec4, _ = run(samples, lex, lm, jobs=4)
        assert sorted(serialize(r) for r in rec1) == sorted(serialize(r) for r in rec4)

    def test_write_and_reload_records(self, lex, lm, tmp_path):
        samples = load_manifest(manifest_path())[:5]
        records, _ = run(samples, lex, lm)
        out = tmp_path / "records.jsonl"
        write_records(records, out)
        lines = out.read_text(encoding="utf-8").splitlines()
        assert len(lines) == len(records)
        for line in lines:
            assert validate_record(deserialize(line)) == []

    def test_swap_hypotheses_flag(self, lex, lm):
        samples = [SampleManifest.from_dict(row(
            "s1", "今天我们讨论和议的问题", "今天我们讨论合意的问题",
            caption="画面里有和议,旁边写着和议",
        ))]
        swapped = replace(DEFAULT_PIPELINE, swap_hypotheses=True)
        records, _ = run(samples, lex, lm, swapped)
        assert records[0].provenance.asr_hyp_primary == "今天我们讨论合意的问题"
        assert records[0].transcription == "今天我们讨论和议的问题"


class _VetoAnnotator(AnnotatorClient):
    def judge_suitability(self, sample, spans, default):
        return SuitabilityResult(False, "vetoed by external judge")

    def generate_reasoning(self, record_dict, default_text):
        return default_text


class TestAnnotatorClient:
    def test_client_can_veto_suitability(self, lex, lm):
        samples = [SampleManifest.from_dict(row(
            "s1", "今天我们讨论和议的问题", "今天我们讨论合意的问题",
        ))]
        records, report = run(samples, lex, lm, client=_VetoAnnotator())
        assert records == []
        assert "vetoed" in report.skipped[0][1]

    def test_http_client_round_trip(self, monkeypatch):
        calls = {}

        class FakeResponse:
            def raise_for_status(self):
                pass

            def json(self):
                return {"suitable": True, "reason": "remote says yes"}

        def fake_post(url, json=None, timeout=None):
            calls["url"] = url
            calls["payload"] = json
            return FakeResponse()

        import avcurate.pipeline as mod

        monkeypatch.setattr(mod.httpx, "post", fake_post)
        client = HttpAnnotatorClient("http://judge.local/api/")
        sample = SampleManifest.from_dict(row("s1", "a", "b"))
        result = client.judge_suitability(sample, [], SuitabilityResult(False, "x"))
        assert result.suitable and result.reason == "remote says yes"
        assert calls["url"] == "http://judge.local/api/suitability"


class TestSynthCorpus:
    def test_generator_contract(self, lex, lm):
        rows = synth_corpus(seed=1, size=10, lex=lex)
        assert len(rows) == 10
        for r in rows:
            assert r["gold_transcript"]
            pa = g2p(normalize(r["asr_hyp_primary"], DEFAULT_PIPELINE.text_normalize).text, lex)
            other = normalize(r["asr_hyp_secondary"], DEFAULT_PIPELINE.text_normalize)
            spans = detect_spans(pa, lex, other)
            assert len(spans) == 1, r["sample_id"]

    def test_same_seed_byte_identical(self, lex):
        a = json.dumps(synth_corpus(seed=3, size=15, lex=lex), ensure_ascii=False)
        b = json.dumps(synth_corpus(seed=3, size=15, lex=lex), ensure_ascii=False)
        assert a == b

    def test_different_seeds_differ(self, lex):
        a = synth_corpus(seed=1, size=15, lex=lex)
        b = synth_corpus(seed=2, size=15, lex=lex)
        assert a != b

    def test_caption_recovers_gold_and_empty_follows_lm(self, lex, lm):
        rows = synth_corpus(seed=11, size=30, lex=lex)
        cfg = DEFAULT_PIPELINE
        for r in rows:
            pa = g2p(normalize(r["asr_hyp_primary"], cfg.text_normalize).text, lex)
            other = normalize(r["asr_hyp_secondary"], cfg.text_normalize)
            spans = detect_spans(pa, lex, other)
            ctx = extract_keywords(
                background_text=r["ocr"]["background"], caption=r["caption"]
            )
            assert decode(pa, spans, ctx, lm, lex).transcription == r["gold_transcript"]

            # with no context, output equals pure LM selection (lambda_ctx = 0)
            empty_out = decode(pa, spans, EMPTY_CONTEXT, lm, lex).transcription
            lm_only = decode(pa, spans, ctx, lm, lex, DecoderConfig(lambda_ctx=0.0)).transcription
            assert empty_out == lm_only

    def test_lexicon_too_small(self):
        from avcurate.phonetics import parse_lexicon

        tiny = parse_lexicon("和\thé\t10\n议\tyì\t5\n和议\thé yì\t3")
        with pytest.raises(ValueError, match="too small"):
            synth_corpus(seed=1, size=5, lex=tiny)

    def test_lm_corpus_asset_in_sync(self, lex):
        from avcurate.assets import lm_corpus_path

        lines = lm_corpus_path().read_text(encoding="utf-8").splitlines()
        assert [ln for ln in lines if ln.strip()] == lm_training_corpus(lex)

    def test_clusters_have_disjoint_pairs(self, lex):
        for cluster in plantable_clusters(lex):
            for alt in cluster.alternatives:
                assert not set(alt) & set(cluster.dominant)
