#!/usr/bin/env python3
"""Regenerate the frontend test fixtures from the bundled pipeline output.

Emits ten records plus a diff fixture whose expected cells are computed
from the alignment trace, so the UI diff test checks against the exact
backend positions.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from avcurate.assets import default_lexicon, default_lm, manifest_path
from avcurate.pipeline import load_manifest, run
from avcurate.records import record_to_dict
from avcurate.textmetrics import NormalizeConfig, cer, normalize

FIXTURES = Path(__file__).resolve().parents[1] / "frontend" / "test" / "fixtures"


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    records, _ = run(load_manifest(manifest_path()), default_lexicon(), default_lm())
    lines = [json.dumps(record_to_dict(r), ensure_ascii=False, separators=(",", ":"))
             for r in records[:10]]
    (FIXTURES / "records.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")

    cfg = NormalizeConfig(strip_punctuation=True)
    hyp = normalize("今天我们讨论和议的问题啊", cfg)
    ref = normalize("今天大家讨论合意的问题", cfg)
    report = cer(hyp, ref)
    expected_cells = []
    for op in report.ops:
        expected_cells.append({
            "kind": op.kind.value,
            "hyp": hyp.codepoints[op.hyp_index] if op.hyp_index is not None else None,
            "ref": ref.codepoints[op.ref_index] if op.ref_index is not None else None,
            "hyp_index": op.hyp_index,
            "ref_index": op.ref_index,
        })
    fixture = {
        "aligned_hyp": hyp.text,
        "aligned_ref": ref.text,
        "cer": report.to_dict(),
        "expected_cells": expected_cells,
    }
    (FIXTURES / "diff_fixture.json").write_text(
        json.dumps(fixture, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote fixtures to {FIXTURES}")


if __name__ == "__main__":
    main()
