"""Human review queue for disagreement tables.

Claim/label/escalate/resolve lifecycle with lease-based claims,
first-annotation-wins resolutions, and an append-only event log from which
the full state can be rebuilt at any time.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .corpus import ProtocolDoc, render_json_view, render_text_view
from .labeling import Annotation, AnnotationSource, Verdict
from .pipeline import ConsensusOutcome, ConsensusStatus

__all__ = [
    "ReviewError",
    "ItemStatus",
    "HumanDecision",
    "EventKind",
    "Claim",
    "Resolution",
    "ReviewItem",
    "ReviewEvent",
    "ReviewStore",
    "DEFAULT_CLAIM_TTL_S",
]

DEFAULT_CLAIM_TTL_S = 15 * 60.0


class ReviewError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class ItemStatus(enum.Enum):
    PENDING = "PENDING"
    CLAIMED = "CLAIMED"
    LABELED = "LABELED"
    ESCALATED = "ESCALATED"
    RESOLVED = "RESOLVED"


class HumanDecision(enum.Enum):
    SOE = "SOE"
    NON_SOE = "NON_SOE"
    UNKNOWN = "UNKNOWN"


class EventKind(enum.Enum):
    ENQUEUED = "ENQUEUED"
    CLAIMED = "CLAIMED"
    CLAIM_EXPIRED = "CLAIM_EXPIRED"
    LABELED = "LABELED"
    MARKED_UNKNOWN = "MARKED_UNKNOWN"
    ESCALATED = "ESCALATED"
    EXPERT_RESOLVED = "EXPERT_RESOLVED"


@dataclass
class Claim:
    annotator_id: str
    expiry: float


@dataclass
class Resolution:
    label: bool
    source: AnnotationSource
    timestamp: float


@dataclass
class ReviewItem:
    table_id: str
    rendered_json_view: str
    rendered_text_view: str
    llm_verdicts: tuple[Verdict, Verdict]
    status: ItemStatus = ItemStatus.PENDING
    claim: Claim | None = None
    resolution: Resolution | None = None
    enqueue_seq: int = 0

    def to_record(self) -> dict:
        return {
            "table_id": self.table_id,
            "rendered_json_view": self.rendered_json_view,
            "rendered_text_view": self.rendered_text_view,
            "llm_verdicts": [v.value for v in self.llm_verdicts],
            "status": self.status.value,
            "claim": None
            if self.claim is None
            else {"annotator_id": self.claim.annotator_id, "expiry": self.claim.expiry},
            "resolution": None
            if self.resolution is None
            else {
                "label": self.resolution.label,
                "source": self.resolution.source.value,
                "timestamp": self.resolution.timestamp,
            },
            "enqueue_seq": self.enqueue_seq,
        }

    @classmethod
    def from_record(cls, rec: dict) -> ReviewItem:
        claim = rec.get("claim")
        resolution = rec.get("resolution")
        return cls(
            table_id=rec["table_id"],
            rendered_json_view=rec["rendered_json_view"],
            rendered_text_view=rec["rendered_text_view"],
            llm_verdicts=(Verdict(rec["llm_verdicts"][0]), Verdict(rec["llm_verdicts"][1])),
            status=ItemStatus(rec["status"]),
            claim=None if claim is None else Claim(claim["annotator_id"], claim["expiry"]),
            resolution=None
            if resolution is None
            else Resolution(
                resolution["label"],
                AnnotationSource(resolution["source"]),
                resolution["timestamp"],
            ),
            enqueue_seq=rec["enqueue_seq"],
        )


@dataclass(frozen=True)
class ReviewEvent:
    sequence_no: int
    kind: EventKind
    table_id: str
    actor_id: str
    payload: dict
    timestamp: float

    def to_record(self) -> dict:
        return {
            "sequence_no": self.sequence_no,
            "kind": self.kind.value,
            "table_id": self.table_id,
            "actor_id": self.actor_id,
            "payload": self.payload,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_record(cls, rec: dict) -> ReviewEvent:
        return cls(
            sequence_no=rec["sequence_no"],
            kind=EventKind(rec["kind"]),
            table_id=rec["table_id"],
            actor_id=rec["actor_id"],
            payload=rec["payload"],
            timestamp=rec["timestamp"],
        )


class ReviewStore:
    """Single-writer review queue backed by an event log plus snapshots.

    Every mutation is validated under the lock, appended to the log, and then
    applied through the same transition function used for replay, so a replay
    of the log always reproduces the live state.
    """

    def __init__(
        self,
        data_dir: str | Path,
        claim_ttl_s: float = DEFAULT_CLAIM_TTL_S,
        experts: set[str] | None = None,
        clock: Callable[[], float] = time.time,
    ):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.claim_ttl_s = claim_ttl_s
        self.experts = set(experts or set())
        self._clock = clock
        self._lock = threading.RLock()
        self._items: dict[str, ReviewItem] = {}
        self._seq = 0
        self._load()

    # --- persistence ---------------------------------------------------------

    @property
    def events_path(self) -> Path:
        return self.data_dir / "events.jsonl"

    @property
    def snapshot_path(self) -> Path:
        return self.data_dir / "snapshot.json"

    def _load(self) -> None:
        last_seq = 0
        if self.snapshot_path.exists():
            snap = json.loads(self.snapshot_path.read_text(encoding="utf-8"))
            self._items = {
                rec["table_id"]: ReviewItem.from_record(rec) for rec in snap["items"]
            }
            self._seq = last_seq = snap["last_seq"]
        if self.events_path.exists():
            with open(self.events_path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    event = ReviewEvent.from_record(json.loads(line))
                    if event.sequence_no > last_seq:
                        self._apply(self._items, event)
                        self._seq = event.sequence_no

    def _append(self, event: ReviewEvent) -> None:
        with open(self.events_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event.to_record(), ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def write_snapshot(self) -> None:
        with self._lock:
            payload = {
                "format": 1,
                "last_seq": self._seq,
                "items": [item.to_record() for item in self._items.values()],
            }
            tmp = self.snapshot_path.with_suffix(".json.tmp")
            tmp.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
            os.replace(tmp, self.snapshot_path)

    def _emit(self, kind: EventKind, table_id: str, actor_id: str, payload: dict) -> ReviewEvent:
        # Callers hold the lock. Append-then-apply: the log leads the state.
        self._seq += 1
        event = ReviewEvent(
            sequence_no=self._seq,
            kind=kind,
            table_id=table_id,
            actor_id=actor_id,
            payload=payload,
            timestamp=self._clock(),
        )
        self._append(event)
        self._apply(self._items, event)
        return event

    # --- transition function (shared by live ops and replay) -----------------

    @staticmethod
    def _apply(items: dict[str, ReviewItem], event: ReviewEvent) -> None:
        kind, payload = event.kind, event.payload
        if kind is EventKind.ENQUEUED:
            items[event.table_id] = ReviewItem(
                table_id=event.table_id,
                rendered_json_view=payload["rendered_json_view"],
                rendered_text_view=payload["rendered_text_view"],
                llm_verdicts=(
                    Verdict(payload["llm_verdicts"][0]),
                    Verdict(payload["llm_verdicts"][1]),
                ),
                status=ItemStatus.PENDING,
                enqueue_seq=event.sequence_no,
            )
            return
        item = items[event.table_id]
        if kind is EventKind.CLAIMED:
            item.status = ItemStatus.CLAIMED
            item.claim = Claim(annotator_id=event.actor_id, expiry=payload["expiry"])
        elif kind is EventKind.CLAIM_EXPIRED:
            item.status = ItemStatus.PENDING
            item.claim = None
        elif kind is EventKind.LABELED:
            if payload.get("ignored"):
                return  # late submission after first annotation: logged, no effect
            item.status = ItemStatus.LABELED
            item.claim = None
            item.resolution = Resolution(
                label=payload["label"],
                source=AnnotationSource(payload["source"]),
                timestamp=event.timestamp,
            )
        elif kind is EventKind.MARKED_UNKNOWN:
            pass  # provenance only; the paired ESCALATED event moves status
        elif kind is EventKind.ESCALATED:
            item.status = ItemStatus.ESCALATED
            item.claim = None
        elif kind is EventKind.EXPERT_RESOLVED:
            item.status = ItemStatus.RESOLVED
            item.claim = None
            item.resolution = Resolution(
                label=payload["label"],
                source=AnnotationSource.HUMAN_EXPERT,
                timestamp=event.timestamp,
            )

    def _expire_stale_claims(self) -> None:
        # Callers hold the lock. Lazy lease sweep; every expiry is logged.
        now = self._clock()
        for item in self._items.values():
            if item.status is ItemStatus.CLAIMED and item.claim and item.claim.expiry <= now:
                self._emit(
                    EventKind.CLAIM_EXPIRED,
                    item.table_id,
                    "system",
                    {"expired_annotator": item.claim.annotator_id},
                )

    # --- operations ----------------------------------------------------------

    def enqueue_disagreements(
        self,
        outcomes: list[ConsensusOutcome],
        corpus: list[ProtocolDoc],
        pairs: dict[str, tuple[Annotation, Annotation]] | None = None,
    ) -> int:
        """Queue one PENDING item per not-yet-queued DISAGREE outcome."""
        tables = {t.table_id: t for doc in corpus for t in doc.tables}
        pairs = pairs or {}
        count = 0
        with self._lock:
            for oc in outcomes:
                if oc.status is not ConsensusStatus.DISAGREE or oc.table_id in self._items:
                    continue
                table = tables.get(oc.table_id)
                if table is None:
                    raise ReviewError(
                        "UNKNOWN_TABLE", f"DISAGREE table {oc.table_id!r} not in corpus"
                    )
                if oc.table_id in pairs:
                    json_ann, text_ann = pairs[oc.table_id]
                    verdicts = [json_ann.verdict.value, text_ann.verdict.value]
                else:
                    verdicts = [Verdict.UNKNOWN.value, Verdict.UNKNOWN.value]
                self._emit(
                    EventKind.ENQUEUED,
                    oc.table_id,
                    "pipeline",
                    {
                        "rendered_json_view": render_json_view(table).to_json(),
                        "rendered_text_view": render_text_view(table).text,
                        "llm_verdicts": verdicts,
                    },
                )
                count += 1
        return count

    def claim(self, annotator_id: str, table_id: str | None = None) -> ReviewItem | None:
        """Atomically lease a PENDING item: the named one, or the oldest.

        Returns None when claiming-the-oldest finds an empty queue; claiming a
        named item that is not PENDING raises ALREADY_CLAIMED instead, so that
        exactly one of two racing claimants can win.
        """
        if not annotator_id:
            raise ReviewError("BAD_ACTOR", "annotator_id must be non-empty")
        with self._lock:
            self._expire_stale_claims()
            if table_id is None:
                pending = [i for i in self._items.values() if i.status is ItemStatus.PENDING]
                if not pending:
                    return None
                item = min(pending, key=lambda i: i.enqueue_seq)
            else:
                item = self._items.get(table_id)
                if item is None:
                    raise ReviewError("UNKNOWN_ITEM", f"no review item for table {table_id!r}")
                if item.status is not ItemStatus.PENDING:
                    raise ReviewError(
                        "ALREADY_CLAIMED",
                        f"table {table_id!r} is {item.status.value}, not claimable",
                    )
            expiry = self._clock() + self.claim_ttl_s
            self._emit(EventKind.CLAIMED, item.table_id, annotator_id, {"expiry": expiry})
            return self._copy(item)

    def submit_label(
        self, annotator_id: str, table_id: str, decision: HumanDecision
    ) -> ReviewItem:
        """Record a decision on a claimed item.

        First annotation wins: a submission against an already LABELED or
        RESOLVED item is appended to the log but changes nothing.
        """
        with self._lock:
            self._expire_stale_claims()
            item = self._items.get(table_id)
            if item is None:
                raise ReviewError("UNKNOWN_ITEM", f"no review item for table {table_id!r}")
            if item.status in (ItemStatus.LABELED, ItemStatus.RESOLVED):
                self._emit(
                    EventKind.LABELED,
                    table_id,
                    annotator_id,
                    {"decision": decision.value, "ignored": True},
                )
                return self._copy(item)
            if (
                item.status is not ItemStatus.CLAIMED
                or item.claim is None
                or item.claim.annotator_id != annotator_id
            ):
                raise ReviewError(
                    "NOT_CLAIM_HOLDER",
                    f"{annotator_id!r} does not hold the active claim on {table_id!r}",
                )
            if decision is HumanDecision.UNKNOWN:
                self._emit(EventKind.MARKED_UNKNOWN, table_id, annotator_id, {})
                self._emit(EventKind.ESCALATED, table_id, annotator_id, {})
            else:
                self._emit(
                    EventKind.LABELED,
                    table_id,
                    annotator_id,
                    {
                        "decision": decision.value,
                        "label": decision is HumanDecision.SOE,
                        "source": AnnotationSource.HUMAN_NONEXPERT.value,
                    },
                )
            return self._copy(self._items[table_id])

    def expert_resolve(
        self, expert_id: str, table_id: str, decision: HumanDecision
    ) -> ReviewItem:
        with self._lock:
            self._expire_stale_claims()
            item = self._items.get(table_id)
            if item is None:
                raise ReviewError("UNKNOWN_ITEM", f"no review item for table {table_id!r}")
            if expert_id not in self.experts:
                raise ReviewError("NOT_EXPERT", f"{expert_id!r} is not in the expert role table")
            if decision is HumanDecision.UNKNOWN:
                raise ReviewError("BAD_DECISION", "expert resolution must be SOE or NON_SOE")
            if item.status is not ItemStatus.ESCALATED:
                raise ReviewError(
                    "NOT_ESCALATED", f"table {table_id!r} is {item.status.value}, not ESCALATED"
                )
            self._emit(
                EventKind.EXPERT_RESOLVED,
                table_id,
                expert_id,
                {"decision": decision.value, "label": decision is HumanDecision.SOE},
            )
            return self._copy(self._items[table_id])

    # --- reads ---------------------------------------------------------------

    def get(self, table_id: str) -> ReviewItem:
        with self._lock:
            self._expire_stale_claims()
            item = self._items.get(table_id)
            if item is None:
                raise ReviewError("UNKNOWN_ITEM", f"no review item for table {table_id!r}")
            return self._copy(item)

    def queue(self, status: ItemStatus | None = None) -> list[ReviewItem]:
        with self._lock:
            self._expire_stale_claims()
            items = sorted(self._items.values(), key=lambda i: i.enqueue_seq)
            if status is not None:
                items = [i for i in items if i.status is status]
            return [self._copy(i) for i in items]

    def stats(self) -> dict[str, int]:
        with self._lock:
            self._expire_stale_claims()
            out = {status.value: 0 for status in ItemStatus}
            for item in self._items.values():
                out[item.status.value] += 1
            out["TOTAL"] = len(self._items)
            return out

    def export_human_labels(self) -> dict[str, bool]:
        """Labels of every LABELED and RESOLVED item; read-only."""
        with self._lock:
            return {
                i.table_id: i.resolution.label
                for i in self._items.values()
                if i.status in (ItemStatus.LABELED, ItemStatus.RESOLVED) and i.resolution
            }

    def events(self) -> list[ReviewEvent]:
        out = []
        if self.events_path.exists():
            with open(self.events_path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        out.append(ReviewEvent.from_record(json.loads(line)))
        return out

    def state_hash(self) -> str:
        with self._lock:
            payload = json.dumps(
                [self._items[k].to_record() for k in sorted(self._items)], sort_keys=True
            )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    @staticmethod
    def replay(events: list[ReviewEvent]) -> dict[str, ReviewItem]:
        """Rebuild item state purely from an event sequence."""
        items: dict[str, ReviewItem] = {}
        for event in sorted(events, key=lambda e: e.sequence_no):
            ReviewStore._apply(items, event)
        return items

    @staticmethod
    def _copy(item: ReviewItem) -> ReviewItem:
        return ReviewItem.from_record(item.to_record())
