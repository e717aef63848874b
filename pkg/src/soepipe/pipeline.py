"""Workflow core: screening, OR-rule classification, consensus filtering,
labeling policies, protocol splits, and fine-tune dataset assembly.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import ProtocolDoc, TableRecord, render_json_view, render_text_view
from .labeling import (
    Annotation,
    AnnotationSource,
    JSON_PROMPT_TEMPLATE,
    Labeler,
    TEXT_PROMPT_TEMPLATE,
    Verdict,
    View,
    annotate_tables,
    build_prompt,
)

__all__ = [
    "PipelineError",
    "ConsensusStatus",
    "ConsensusOutcome",
    "LabelingPolicy",
    "LabelSource",
    "Split",
    "SplitAssignment",
    "LabeledTable",
    "ViewChoice",
    "FineTuneExample",
    "classify_or_rule",
    "screen_tables",
    "consensus",
    "pair_annotations",
    "consensus_outcomes",
    "or_labels_from_pairs",
    "apply_policy",
    "split_protocols",
    "assemble_dataset",
    "export_examples",
]


class PipelineError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class ConsensusStatus(enum.Enum):
    AGREE = "AGREE"
    DISAGREE = "DISAGREE"


@dataclass(frozen=True)
class ConsensusOutcome:
    table_id: str
    status: ConsensusStatus
    agreed_label: bool | None = None


class LabelingPolicy(enum.Enum):
    ALL = "ALL"
    FILTERED = "FILTERED"
    HYBRID = "HYBRID"


class LabelSource(enum.Enum):
    LLM_CONSENSUS = "LLM_CONSENSUS"
    LLM_OR_RULE = "LLM_OR_RULE"
    HUMAN = "HUMAN"


class Split(enum.Enum):
    TRAIN = "TRAIN"
    VALIDATION = "VALIDATION"
    TEST = "TEST"


@dataclass
class SplitAssignment:
    assignment: dict[str, Split]
    seed: int
    sizes: tuple[int, int, int]

    def protocols_in(self, split: Split) -> list[str]:
        return [p for p, s in self.assignment.items() if s is split]

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "sizes": list(self.sizes),
                "assignment": {p: s.value for p, s in self.assignment.items()},
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, text: str) -> SplitAssignment:
        raw = json.loads(text)
        return cls(
            assignment={p: Split(s) for p, s in raw["assignment"].items()},
            seed=raw["seed"],
            sizes=tuple(raw["sizes"]),
        )


@dataclass(frozen=True)
class LabeledTable:
    table_id: str
    label: bool
    label_source: LabelSource
    policy: LabelingPolicy


class ViewChoice(enum.Enum):
    JSON_VIEW = "JSON_VIEW"
    TEXT_VIEW = "TEXT_VIEW"
    BOTH = "BOTH"


@dataclass(frozen=True)
class FineTuneExample:
    input_text: str
    target: str
    table_id: str
    protocol_id: str
    split: str


def classify_or_rule(json_verdict: Verdict, text_verdict: Verdict) -> bool:
    """Positive iff either view says YES; UNKNOWN counts as not-YES."""
    return json_verdict is Verdict.YES or text_verdict is Verdict.YES


def screen_tables(
    screener: Labeler, corpus: list[ProtocolDoc], max_in_flight: int = 8
) -> set[str]:
    """OR-rule positives under the screening labeler; only these go to annotation."""
    tables = [t for doc in corpus for t in doc.tables]
    merged = annotate_tables(screener, tables, max_in_flight=max_in_flight)
    kept = set()
    for t in tables:
        jv = merged[(t.table_id, View.JSON_VIEW)].verdict
        tv = merged[(t.table_id, View.TEXT_VIEW)].verdict
        if classify_or_rule(jv, tv):
            kept.add(t.table_id)
    return kept


def consensus(json_ann: Annotation, text_ann: Annotation) -> ConsensusOutcome:
    """AGREE only on an identical YES/NO pair; any UNKNOWN forces DISAGREE."""
    if json_ann.table_id != text_ann.table_id:
        raise PipelineError(
            "TABLE_ID_MISMATCH",
            f"annotation pair spans tables {json_ann.table_id!r} and {text_ann.table_id!r}",
        )
    if json_ann.view is not View.JSON_VIEW or text_ann.view is not View.TEXT_VIEW:
        raise PipelineError("VIEW_MISMATCH", f"bad view pair for table {json_ann.table_id!r}")
    a, b = json_ann.verdict, text_ann.verdict
    if a is b and a is not Verdict.UNKNOWN:
        return ConsensusOutcome(json_ann.table_id, ConsensusStatus.AGREE, a is Verdict.YES)
    return ConsensusOutcome(json_ann.table_id, ConsensusStatus.DISAGREE, None)


def pair_annotations(
    merged: dict[tuple[str, View], Annotation],
) -> dict[str, tuple[Annotation, Annotation]]:
    """Group a keyed annotation map into per-table (json, text) pairs.

    Tables missing either view (e.g. not screened) are omitted.
    """
    pairs: dict[str, tuple[Annotation, Annotation]] = {}
    for (table_id, view), ann in merged.items():
        if view is View.JSON_VIEW and (table_id, View.TEXT_VIEW) in merged:
            pairs[table_id] = (ann, merged[(table_id, View.TEXT_VIEW)])
    return pairs


def consensus_outcomes(
    pairs: dict[str, tuple[Annotation, Annotation]],
) -> list[ConsensusOutcome]:
    return [consensus(j, t) for j, t in (pairs[k] for k in sorted(pairs))]


def or_labels_from_pairs(pairs: dict[str, tuple[Annotation, Annotation]]) -> dict[str, bool]:
    return {
        table_id: classify_or_rule(j.verdict, t.verdict) for table_id, (j, t) in pairs.items()
    }


def apply_policy(
    policy: LabelingPolicy,
    outcomes: list[ConsensusOutcome],
    or_labels: dict[str, bool],
    human_labels: dict[str, bool] | None = None,
) -> list[LabeledTable]:
    """Materialize training labels under one of the three policies.

    ALL keeps every table (consensus label where views agree, OR-rule label
    where they do not). FILTERED keeps only agreeing tables. HYBRID keeps
    every table, replacing disagreement labels with human ones.
    """
    human_labels = human_labels or {}
    out: list[LabeledTable] = []
    for oc in outcomes:
        if oc.status is ConsensusStatus.AGREE:
            out.append(LabeledTable(oc.table_id, bool(oc.agreed_label), LabelSource.LLM_CONSENSUS, policy))
            continue
        if policy is LabelingPolicy.FILTERED:
            continue
        if policy is LabelingPolicy.ALL:
            if oc.table_id not in or_labels:
                raise PipelineError("MISSING_OR_LABEL", f"no OR-rule label for {oc.table_id!r}")
            out.append(LabeledTable(oc.table_id, or_labels[oc.table_id], LabelSource.LLM_OR_RULE, policy))
        else:
            if oc.table_id not in human_labels:
                raise PipelineError(
                    "MISSING_HUMAN_LABEL", f"HYBRID needs a human label for {oc.table_id!r}"
                )
            out.append(LabeledTable(oc.table_id, human_labels[oc.table_id], LabelSource.HUMAN, policy))
    return out


def split_protocols(
    protocol_ids: list[str], sizes: tuple[int, int, int], seed: int
) -> SplitAssignment:
    """Uniformly random exhaustive partition, deterministic given seed."""
    n_train, n_val, n_test = sizes
    if n_train + n_val + n_test != len(protocol_ids):
        raise PipelineError(
            "SIZE_MISMATCH",
            f"sizes {sizes} sum to {n_train + n_val + n_test}, have {len(protocol_ids)} protocols",
        )
    if len(set(protocol_ids)) != len(protocol_ids):
        raise PipelineError("SIZE_MISMATCH", "protocol ids are not unique")
    rng = np.random.default_rng(seed)
    order = [protocol_ids[i] for i in rng.permutation(len(protocol_ids))]
    assignment: dict[str, Split] = {}
    for i, pid in enumerate(order):
        if i < n_train:
            assignment[pid] = Split.TRAIN
        elif i < n_train + n_val:
            assignment[pid] = Split.VALIDATION
        else:
            assignment[pid] = Split.TEST
    return SplitAssignment(assignment=assignment, seed=seed, sizes=sizes)


def assemble_dataset(
    labels: list[LabeledTable],
    corpus: list[ProtocolDoc],
    split: SplitAssignment,
    view_choice: ViewChoice = ViewChoice.BOTH,
) -> list[FineTuneExample]:
    """One prompt-completion example per (labeled table, chosen view)."""
    tables: dict[str, TableRecord] = {t.table_id: t for doc in corpus for t in doc.tables}
    rows: list[tuple[str, str, str, FineTuneExample]] = []
    for lt in labels:
        table = tables.get(lt.table_id)
        if table is None:
            raise PipelineError("UNKNOWN_TABLE", f"labeled table {lt.table_id!r} not in corpus")
        if table.protocol_id not in split.assignment:
            raise PipelineError(
                "MISSING_SPLIT", f"protocol {table.protocol_id!r} has no split assignment"
            )
        split_name = split.assignment[table.protocol_id].value
        target = "YES" if lt.label else "NO"
        views = []
        if view_choice in (ViewChoice.JSON_VIEW, ViewChoice.BOTH):
            views.append(("JSON_VIEW", build_prompt(JSON_PROMPT_TEMPLATE, render_json_view(table))))
        if view_choice in (ViewChoice.TEXT_VIEW, ViewChoice.BOTH):
            views.append(("TEXT_VIEW", build_prompt(TEXT_PROMPT_TEMPLATE, render_text_view(table))))
        for view_name, input_text in views:
            ex = FineTuneExample(
                input_text=input_text,
                target=target,
                table_id=table.table_id,
                protocol_id=table.protocol_id,
                split=split_name,
            )
            rows.append((table.protocol_id, table.table_id, view_name, ex))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return [r[3] for r in rows]


def export_examples(examples: list[FineTuneExample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(
                json.dumps(
                    {
                        "input_text": ex.input_text,
                        "target": ex.target,
                        "table_id": ex.table_id,
                        "protocol_id": ex.protocol_id,
                        "split": ex.split,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
