import json

import pytest

from avcurate.assets import manifest_path
from avcurate.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestCer:
    def test_json_report(self, tmp_path, capsys):
        (tmp_path / "h.txt").write_text("今天天气好", encoding="utf-8")
        (tmp_path / "r.txt").write_text("今天天气很好", encoding="utf-8")
        code, out, _ = run_cli(capsys, "cer", "--hyp", str(tmp_path / "h.txt"),
                               "--ref", str(tmp_path / "r.txt"), "--json")
        assert code == 0
        report = json.loads(out)
        assert report["deletions"] == 1
        assert report["cer"] == pytest.approx(1 / 6)


class TestFilter:
    def test_annotates_pairs(self, tmp_path, capsys):
        pairs = tmp_path / "pairs.jsonl"
        rows = [
            {"hyp": "今天好", "ref": "今天好"},
            {"hyp": "今天好", "ref": "今天坏"},
            {"hyp": "完全不同的话", "ref": "嗯"},
        ]
        pairs.write_text("\n".join(json.dumps(r, ensure_ascii=False) for r in rows), encoding="utf-8")
        code, out, _ = run_cli(capsys, "filter", "--pairs", str(pairs))
        assert code == 0
        decisions = [json.loads(l)["decision"] for l in out.splitlines()]
        assert decisions == ["discard_trivial", "retain", "discard_noisy"]


class TestTextCommands:
    def test_g2p(self, capsys):
        code, out, _ = run_cli(capsys, "g2p", "--text", "和议")
        assert code == 0
        assert out.strip() == "hé yì"

    def test_homophones_json(self, capsys):
        code, out, _ = run_cli(capsys, "homophones", "--span", "he2 yi4", "--json")
        assert code == 0
        texts = [e["text"] for e in json.loads(out)]
        assert "和议" in texts and "合意" in texts

    def test_detect_ambiguity(self, capsys):
        code, out, _ = run_cli(
            capsys, "detect-ambiguity",
            "--text", "今天我们讨论和议的问题",
            "--other", "今天我们讨论合意的问题", "--json",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["suitable"]
        assert len(payload["spans"]) == 1

    def test_disambiguate_with_context(self, tmp_path, capsys):
        ctx = tmp_path / "ctx.json"
        ctx.write_text(json.dumps({"caption": "画面里有和议,旁边写着和议"}, ensure_ascii=False),
                       encoding="utf-8")
        code, out, _ = run_cli(
            capsys, "disambiguate",
            "--text", "今天我们讨论合意的问题",
            "--context", str(ctx), "--json", "--trace",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["transcription"] == "今天我们讨论和议的问题"
        assert payload["trace"]["decisions"]


class TestPipelineCommands:
    def test_run_and_validate(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code, out, _ = run_cli(capsys, "pipeline", "run",
                               "--manifest", str(manifest_path()), "--out", str(out_dir))
        assert code == 0
        report = json.loads(out)
        assert report["emitted"] == 20
        code, out, _ = run_cli(capsys, "validate-records",
                               "--records", str(out_dir / "records.jsonl"))
        assert code == 0
        assert "20/20 records valid" in out

    def test_synth_corpus_stdout(self, capsys):
        code, out, _ = run_cli(capsys, "--seed", "2", "synth-corpus", "--size", "4")
        assert code == 0
        rows = [json.loads(l) for l in out.splitlines()]
        assert len(rows) == 4
        assert all("gold_transcript" in r for r in rows)

    def test_evaluate_and_ablate(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        run_cli(capsys, "pipeline", "run", "--manifest", str(manifest_path()),
                "--out", str(out_dir))
        code, out, _ = run_cli(capsys, "evaluate",
                               "--records", str(out_dir / "records.jsonl"),
                               "--refs", str(manifest_path()), "--json")
        assert code == 0
        assert json.loads(out)["cer"] == 0.0

        code, out, _ = run_cli(capsys, "--seed", "1", "ablate",
                               "--manifest", str(manifest_path()), "--json")
        assert code == 0
        table = json.loads(out)
        assert table["full_context"]["cer"] < table["empty_context"]["cer"]

    def test_tune_weights(self, capsys):
        code, out, _ = run_cli(capsys, "tune-weights", "--manifest", str(manifest_path()),
                               "--grid-lm", "1.0", "--grid-ctx", "0.0,0.5", "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["lambda_ctx"] == 0.5
        assert payload["dev_cer"] == 0.0


class TestConfigAndErrors:
    def test_config_file_overridden_by_flag(self, tmp_path, capsys):
        cfg = tmp_path / "avcurate.conf"
        cfg.write_text("lambda_ctx = 0.0\n", encoding="utf-8")
        ctx = tmp_path / "ctx.json"
        ctx.write_text(json.dumps({"caption": "画面里有和议,旁边写着和议"}, ensure_ascii=False),
                       encoding="utf-8")
        # config zeroes the context weight: LM keeps the dominant homophone
        code, out, _ = run_cli(capsys, "--config", str(cfg), "disambiguate",
                               "--text", "今天我们讨论合意的问题", "--context", str(ctx), "--json")
        assert json.loads(out)["transcription"] == "今天我们讨论合意的问题"
        # explicit flag wins over config
        code, out, _ = run_cli(capsys, "--config", str(cfg), "disambiguate",
                               "--text", "今天我们讨论合意的问题", "--context", str(ctx),
                               "--lambda-ctx", "0.5", "--json")
        assert json.loads(out)["transcription"] == "今天我们讨论和议的问题"

    def test_unknown_flag_usage_exit(self):
        with pytest.raises(SystemExit) as exc:
            main(["cer", "--nope"])
        assert exc.value.code == 2

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_operational_error_exit_one(self, capsys):
        code, _, err = run_cli(capsys, "cer", "--hyp", "/no/such/file", "--ref", "/no/such/file")
        assert code == 1
        assert "error" in err

    def test_invalid_records_exit_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"schema": "avcot/1"}\n', encoding="utf-8")
        code, out, _ = run_cli(capsys, "validate-records", "--records", str(bad))
        assert code == 1
