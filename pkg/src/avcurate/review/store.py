"""Event-sourced store for the manual verification loop.

One JSON event per line, append-only; the in-memory state is a pure fold
over the log, so restart-and-replay always reproduces it. Writes funnel
through a single lock and the materialized state is swapped atomically,
so readers always see a complete snapshot.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..records import record_from_dict, validate_record

VALID_ACTIONS = ("accept", "reject", "edit")
_STATUS_BY_ACTION = {"accept": "accepted", "reject": "rejected", "edit": "edited"}
STATUSES = ("pending", "accepted", "rejected", "edited")


class VerdictError(ValueError):
    pass


class UnknownSampleError(KeyError):
    pass


@dataclass(frozen=True)
class ReviewItem:
    record: dict
    status: str = "pending"
    edited_transcription: str | None = None
    reviewer: str | None = None
    verdict_time: float | None = None
    machine_reason: str = ""
    history: tuple[dict, ...] = ()

    @property
    def sample_id(self) -> str:
        return self.record["sample_id"]

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "status": self.status,
            "edited_transcription": self.edited_transcription,
            "reviewer": self.reviewer,
            "verdict_time": self.verdict_time,
            "machine_reason": self.machine_reason,
            "history": list(self.history),
            "record": self.record,
        }

    def final_transcription(self) -> str:
        if self.edited_transcription is not None:
            return self.edited_transcription
        return self.record["transcription"]


def _fold(state: dict[str, ReviewItem], event: dict) -> dict[str, ReviewItem]:
    """Apply one event; returns a new state mapping (copy-on-write)."""
    kind = event["type"]
    nxt = dict(state)
    if kind == "import":
        rec = event["record"]
        sid = rec["sample_id"]
        if sid not in nxt:
            nxt[sid] = ReviewItem(
                record=rec,
                machine_reason=rec.get("provenance", {}).get("suitability_reason", ""),
            )
    elif kind == "verdict":
        sid = event["sample_id"]
        item = nxt[sid]
        status = _STATUS_BY_ACTION[event["action"]]
        nxt[sid] = replace(
            item,
            status=status,
            edited_transcription=event.get("edited_text") if event["action"] == "edit" else None,
            reviewer=event.get("reviewer"),
            verdict_time=event["ts"],
            history=item.history + (event,),
        )
    else:
        raise ValueError(f"unknown event type {kind!r}")
    return nxt


class ReviewStore:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._state: dict[str, ReviewItem] = {}
        if self.path.exists():
            self._replay()
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch()

    def _replay(self) -> None:
        state: dict[str, ReviewItem] = {}
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    state = _fold(state, json.loads(line))
        self._state = state

    def _append(self, event: dict) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False, separators=(",", ":")) + "\n")
            fh.flush()
        self._state = _fold(self._state, event)

    # ------------------------------------------------------------------
    def import_records(self, lines: list[str] | list[dict]) -> dict:
        """Validate and import records; duplicates skip, invalid ones report."""
        imported = 0
        skipped: list[str] = []
        rejected: list[dict] = []
        with self._lock:
            for i, raw in enumerate(lines, start=1):
                try:
                    d = json.loads(raw) if isinstance(raw, str) else raw
                    rec = record_from_dict(d)
                    violations = validate_record(rec)
                    if violations:
                        raise ValueError("; ".join(violations))
                except (ValueError, KeyError, TypeError) as exc:
                    rejected.append({"line": i, "reason": str(exc)})
                    continue
                if rec.sample_id in self._state:
                    skipped.append(rec.sample_id)
                    continue
                self._append({"type": "import", "ts": time.time(), "record": d})
                imported += 1
        return {"imported": imported, "skipped": skipped, "rejected": rejected}

    def verdict(
        self,
        sample_id: str,
        action: str,
        edited_text: str | None = None,
        reviewer: str | None = None,
    ) -> ReviewItem:
        with self._lock:
            if sample_id not in self._state:
                raise UnknownSampleError(sample_id)
            if action not in VALID_ACTIONS:
                raise VerdictError(f"unknown action {action!r}; expected one of {VALID_ACTIONS}")
            if action == "edit":
                if not edited_text:
                    raise VerdictError("edit action requires edited_text")
                if edited_text == self._state[sample_id].record["transcription"]:
                    raise VerdictError("edited_text must differ from the original transcription")
            event = {
                "type": "verdict",
                "ts": time.time(),
                "sample_id": sample_id,
                "action": action,
                "edited_text": edited_text if action == "edit" else None,
                "reviewer": reviewer,
            }
            self._append(event)
            return self._state[sample_id]

    # ------------------------------------------------------------------
    def get(self, sample_id: str) -> ReviewItem:
        item = self._state.get(sample_id)
        if item is None:
            raise UnknownSampleError(sample_id)
        return item

    def list_items(
        self,
        status: str | None = None,
        page: int = 1,
        page_size: int = 50,
    ) -> dict:
        items = sorted(self._state.values(), key=lambda it: it.sample_id)
        if status is not None:
            if status not in STATUSES:
                raise VerdictError(f"unknown status {status!r}")
            items = [it for it in items if it.status == status]
        total = len(items)
        lo = (page - 1) * page_size
        return {
            "total": total,
            "page": page,
            "page_size": page_size,
            "items": [it.to_dict() for it in items[lo:lo + page_size]],
        }

    def stats(self) -> dict:
        counts = {status: 0 for status in STATUSES}
        for item in self._state.values():
            counts[item.status] += 1
        counts["total"] = len(self._state)
        return counts

    def export(self, statuses: tuple[str, ...] = ("accepted", "edited")) -> list[dict]:
        """Final test-set lines: latest-verdict transcription substituted."""
        out = []
        for item in sorted(self._state.values(), key=lambda it: it.sample_id):
            if item.status not in statuses:
                continue
            rec = dict(item.record)
            rec["transcription"] = item.final_transcription()
            rec["review"] = {
                "status": item.status,
                "reviewer": item.reviewer,
                "verdict_time": item.verdict_time,
            }
            out.append(rec)
        return out

    def snapshot(self) -> dict[str, ReviewItem]:
        return self._state
