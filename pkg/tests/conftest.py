"""Shared fixtures and builders for the test suite."""
from __future__ import annotations

import itertools

import pytest
from hypothesis import HealthCheck, settings

from soepipe.corpus import ProtocolDoc, TableRecord
from soepipe.labeling import Annotation, AnnotationSource, Verdict, View

settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")

_timestamps = itertools.count(1)


def make_table(
    table_id: str = "T-001",
    protocol_id: str = "P-001",
    grid: list[list[str]] | None = None,
    context: str = "The schedule below lists assessments per visit.",
    label: bool | None = True,
    page: int = 4,
) -> TableRecord:
    if grid is None:
        grid = [
            ["Assessment", "Screening Visit 1 Day 1", "Treatment Visit 2 Day 8"],
            ["Informed Consent", "X", ""],
            ["Vital Signs", "X", "X"],
        ]
    return TableRecord(
        table_id=table_id,
        protocol_id=protocol_id,
        page_number=page,
        grid=grid,
        context_text=context,
        true_label=label,
    )


def make_doc(
    protocol_id: str = "P-001", tables: list[TableRecord] | None = None
) -> ProtocolDoc:
    if tables is None:
        tables = [make_table(protocol_id=protocol_id)]
    return ProtocolDoc(protocol_id=protocol_id, title=f"Protocol {protocol_id}", tables=tables)


def make_annotation(
    table_id: str,
    view: View,
    verdict: Verdict,
    source: AnnotationSource = AnnotationSource.LLM_LABELER,
    annotator_id: str = "labeler-a",
    timestamp: int | None = None,
) -> Annotation:
    return Annotation(
        table_id=table_id,
        source=source,
        view=view,
        verdict=verdict,
        annotator_id=annotator_id,
        timestamp=next(_timestamps) if timestamp is None else timestamp,
        raw_response=verdict.value,
    )


def make_verdict_pairs(
    n_total: int, n_disagree: int, positive_every: int = 7
) -> dict[str, tuple[Annotation, Annotation]]:
    """n_total (json, text) annotation pairs of which exactly n_disagree differ.

    Disagreements are spread through the id range rather than bunched at the
    front so sorting bugs cannot hide miscounts.
    """
    assert 0 <= n_disagree <= n_total
    disagree_ids = {round(i * n_total / n_disagree) % n_total for i in range(n_disagree)} if n_disagree else set()
    filler = 0
    while len(disagree_ids) < n_disagree:
        disagree_ids.add(filler)
        filler += 1
    pairs: dict[str, tuple[Annotation, Annotation]] = {}
    for idx in range(n_total):
        tid = f"TBL-{idx:05d}"
        agreed = Verdict.YES if idx % positive_every == 0 else Verdict.NO
        if idx in disagree_ids:
            jv, tv = (Verdict.YES, Verdict.NO) if idx % 2 == 0 else (Verdict.NO, Verdict.YES)
        else:
            jv, tv = agreed, agreed
        pairs[tid] = (
            make_annotation(tid, View.JSON_VIEW, jv),
            make_annotation(tid, View.TEXT_VIEW, tv),
        )
    return pairs


@pytest.fixture
def tiny_table() -> TableRecord:
    return make_table()
