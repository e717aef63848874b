"""Verdict acquisition: prompt construction, labeler clients, and noise simulation.

Every table is judged twice, once per rendering. The HTTP client talks to a
minimal text-completion endpoint; the simulated labeler draws seeded noisy
verdicts so the whole pipeline runs offline.
"""

from __future__ import annotations

import enum
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .corpus import JsonView, TableRecord, TextView, render_json_view, render_text_view
from .prompts import JSON_PROMPT_BODY, JSON_PROMPT_SLOT, TEXT_PROMPT_BODY, TEXT_PROMPT_SLOT
from ._core import uniform_from_key

__all__ = [
    "Verdict",
    "AnnotationSource",
    "View",
    "Annotation",
    "PromptKind",
    "PromptTemplate",
    "NoiseModel",
    "LabelingError",
    "JSON_PROMPT_TEMPLATE",
    "TEXT_PROMPT_TEMPLATE",
    "build_prompt",
    "parse_verdict",
    "simulate_verdicts",
    "SimulatedLabeler",
    "HttpLabeler",
    "annotate_table",
    "annotate_tables",
    "AnnotationStore",
]


class Verdict(enum.Enum):
    YES = "YES"
    NO = "NO"
    UNKNOWN = "UNKNOWN"


class AnnotationSource(enum.Enum):
    BASE_SCREENER = "BASE_SCREENER"
    LLM_LABELER = "LLM_LABELER"
    HUMAN_NONEXPERT = "HUMAN_NONEXPERT"
    HUMAN_EXPERT = "HUMAN_EXPERT"


class View(enum.Enum):
    JSON_VIEW = "JSON_VIEW"
    TEXT_VIEW = "TEXT_VIEW"
    NA = "NA"


class PromptKind(enum.Enum):
    JSON_PROMPT = "JSON_PROMPT"
    TEXT_PROMPT = "TEXT_PROMPT"


class LabelingError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class Annotation:
    table_id: str
    source: AnnotationSource
    view: View
    verdict: Verdict
    annotator_id: str
    timestamp: int
    raw_response: str | None = None

    def to_record(self) -> dict:
        return {
            "table_id": self.table_id,
            "source": self.source.value,
            "view": self.view.value,
            "verdict": self.verdict.value,
            "annotator_id": self.annotator_id,
            "timestamp": self.timestamp,
            "raw_response": self.raw_response,
        }

    @classmethod
    def from_record(cls, rec: dict) -> Annotation:
        return cls(
            table_id=rec["table_id"],
            source=AnnotationSource(rec["source"]),
            view=View(rec["view"]),
            verdict=Verdict(rec["verdict"]),
            annotator_id=rec["annotator_id"],
            timestamp=rec["timestamp"],
            raw_response=rec.get("raw_response"),
        )


@dataclass(frozen=True)
class PromptTemplate:
    kind: PromptKind
    body: str
    slot: str


JSON_PROMPT_TEMPLATE = PromptTemplate(PromptKind.JSON_PROMPT, JSON_PROMPT_BODY, JSON_PROMPT_SLOT)
TEXT_PROMPT_TEMPLATE = PromptTemplate(PromptKind.TEXT_PROMPT, TEXT_PROMPT_BODY, TEXT_PROMPT_SLOT)


def build_prompt(template: PromptTemplate, view: JsonView | TextView) -> str:
    """Fill the template's single slot with the view's canonical serialization."""
    if template.kind is PromptKind.JSON_PROMPT:
        if not isinstance(view, JsonView):
            raise LabelingError("KIND_MISMATCH", "JSON prompt requires a JsonView")
        content = view.to_json()
    else:
        if not isinstance(view, TextView):
            raise LabelingError("KIND_MISMATCH", "text prompt requires a TextView")
        content = view.text
    return template.body.replace(template.slot, content, 1)


def parse_verdict(raw: str) -> Verdict:
    """Total parser: first token decides, anything unrecognized is UNKNOWN."""
    tokens = raw.split()
    if not tokens:
        return Verdict.UNKNOWN
    head = tokens[0].strip(".,;:!?'\"()[]").lower()
    if head == "yes":
        return Verdict.YES
    if head == "no":
        return Verdict.NO
    return Verdict.UNKNOWN


# --- noise model -------------------------------------------------------------


@dataclass(frozen=True)
class NoiseModel:
    sensitivity_json: float
    specificity_json: float
    sensitivity_text: float
    specificity_text: float
    cross_view_correlation: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in (
            "sensitivity_json",
            "specificity_json",
            "sensitivity_text",
            "specificity_text",
            "cross_view_correlation",
        ):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise LabelingError("INVALID_MODEL", f"{name}={v} outside [0,1]")

    @classmethod
    def uniform(cls, accuracy: float, rho: float = 0.0, seed: int = 0) -> NoiseModel:
        """Same sensitivity and specificity for both views."""
        return cls(accuracy, accuracy, accuracy, accuracy, rho, seed)


def _draw(seed: int, table_id: str, purpose: str) -> float:
    return uniform_from_key(f"{seed}:{table_id}:{purpose}".encode("utf-8"))


def simulate_verdicts(model: NoiseModel, true_label: bool, table_id: str) -> tuple[Verdict, Verdict]:
    """Draw a noisy verdict pair, deterministic in (seed, table_id).

    With probability cross_view_correlation both views judge one shared
    uniform against their own correctness thresholds, so each view keeps its
    configured marginal accuracy while errors become common-cause coupled.
    """
    p_json = model.sensitivity_json if true_label else model.specificity_json
    p_text = model.sensitivity_text if true_label else model.specificity_text
    u_json = _draw(model.seed, table_id, "json")
    coupled = _draw(model.seed, table_id, "couple") < model.cross_view_correlation
    u_text = u_json if coupled else _draw(model.seed, table_id, "text")
    json_correct = u_json < p_json
    text_correct = u_text < p_text

    def verdict(correct: bool) -> Verdict:
        return Verdict.YES if correct == true_label else Verdict.NO

    return verdict(json_correct), verdict(text_correct)


# --- labeler handles ---------------------------------------------------------


class Labeler(Protocol):
    labeler_id: str

    def respond(self, prompt: str, table: TableRecord, view: View) -> str | None:
        """Return the raw completion text, or None on persistent transport failure."""


class _Clock:
    """Strictly increasing integer timestamps, safe under concurrent annotate calls."""

    def __init__(self):
        self._lock = threading.Lock()
        self._t = 0

    def tick(self) -> int:
        with self._lock:
            self._t += 1
            return self._t


class SimulatedLabeler:
    """Seeded noisy labeler; ignores the prompt and judges the table's true label."""

    def __init__(self, model: NoiseModel, labeler_id: str = "simulated"):
        self.model = model
        self.labeler_id = labeler_id

    def respond(self, prompt: str, table: TableRecord, view: View) -> str:
        if table.true_label is None:
            raise LabelingError(
                "MISSING_TRUTH", f"simulated labeler needs true_label on {table.table_id!r}"
            )
        json_v, text_v = simulate_verdicts(self.model, table.true_label, table.table_id)
        return (json_v if view is View.JSON_VIEW else text_v).value


class HttpLabeler:
    """Client for the minimal completion contract: POST /complete {"prompt"} -> {"text"}."""

    def __init__(
        self,
        endpoint: str,
        token: str | None = None,
        labeler_id: str = "http",
        timeout: float = 30.0,
        max_attempts: int = 3,
        backoff_s: float = 0.5,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.token = token
        self.labeler_id = labeler_id
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_s = backoff_s

    @classmethod
    def from_env(cls, **kwargs) -> HttpLabeler:
        import os

        url = os.environ.get("LABELER_URL")
        if not url:
            raise LabelingError("CONFIG_ERROR", "LABELER_URL is not set")
        return cls(url, token=os.environ.get("LABELER_TOKEN"), **kwargs)

    def respond(self, prompt: str, table: TableRecord, view: View) -> str | None:
        import httpx

        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        delay = self.backoff_s
        for attempt in range(self.max_attempts):
            try:
                resp = httpx.post(
                    f"{self.endpoint}/complete",
                    json={"prompt": prompt},
                    headers=headers,
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                return str(resp.json()["text"])
            except Exception:
                if attempt + 1 == self.max_attempts:
                    return None
                time.sleep(delay)
                delay *= 2
        return None


def annotate_table(
    labeler: Labeler, table: TableRecord, clock: _Clock | None = None
) -> tuple[Annotation, Annotation]:
    """Collect one verdict per view; transport failure degrades to UNKNOWN."""
    clock = clock or _Clock()
    out = []
    for view, template, rendered in (
        (View.JSON_VIEW, JSON_PROMPT_TEMPLATE, render_json_view(table)),
        (View.TEXT_VIEW, TEXT_PROMPT_TEMPLATE, render_text_view(table)),
    ):
        prompt = build_prompt(template, rendered)
        raw = labeler.respond(prompt, table, view)
        if raw is None:
            verdict, raw = Verdict.UNKNOWN, "<transport error: retries exhausted>"
        else:
            verdict = parse_verdict(raw)
        out.append(
            Annotation(
                table_id=table.table_id,
                source=AnnotationSource.LLM_LABELER,
                view=view,
                verdict=verdict,
                annotator_id=labeler.labeler_id,
                timestamp=clock.tick(),
                raw_response=raw,
            )
        )
    return out[0], out[1]


def annotate_tables(
    labeler: Labeler, tables: list[TableRecord], max_in_flight: int = 8
) -> dict[tuple[str, View], Annotation]:
    """Annotate many tables with bounded concurrency; keyed merge is order-independent."""
    clock = _Clock()
    results: dict[tuple[str, View], Annotation] = {}
    lock = threading.Lock()

    def work(table: TableRecord) -> None:
        json_ann, text_ann = annotate_table(labeler, table, clock)
        with lock:
            results[(table.table_id, View.JSON_VIEW)] = json_ann
            results[(table.table_id, View.TEXT_VIEW)] = text_ann

    if max_in_flight <= 1 or len(tables) <= 1:
        for t in tables:
            work(t)
    else:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            list(pool.map(work, tables))
    return results


@dataclass
class AnnotationStore:
    """Append-only JSONL store, one annotation per line."""

    path: Path

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, ann: Annotation) -> None:
        self.append_many([ann])

    def append_many(self, anns: list[Annotation] | dict) -> None:
        items = list(anns.values()) if isinstance(anns, dict) else list(anns)
        with open(self.path, "a", encoding="utf-8") as fh:
            for ann in items:
                fh.write(json.dumps(ann.to_record(), ensure_ascii=False) + "\n")

    def load(self) -> list[Annotation]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    out.append(Annotation.from_record(json.loads(line)))
        return out

    def latest_by_key(self) -> dict[tuple[str, View], Annotation]:
        """Last write per (table_id, view) wins; earlier lines are superseded."""
        merged: dict[tuple[str, View], Annotation] = {}
        for ann in self.load():
            merged[(ann.table_id, ann.view)] = ann
        return merged
