"""Protocol/table data model, JSONL interchange, dual views, synthetic corpora.

A corpus is a list of protocol documents, each holding the tables extracted
from one clinical trial protocol. Every table is carried in two renderings:
a column-dict JSON view preserving structure, and a text view holding the
full page text around and inside the table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "CorpusError",
    "ProtocolDoc",
    "TableRecord",
    "JsonView",
    "TextView",
    "SyntheticCorpusSpec",
    "ingest_corpus",
    "serialize_corpus",
    "render_json_view",
    "render_text_view",
    "generate_synthetic_corpus",
]


class CorpusError(ValueError):
    """Corpus-level validation failure with a machine-readable code."""

    def __init__(self, code: str, message: str, *, line_no: int | None = None):
        super().__init__(message)
        self.code = code
        self.line_no = line_no


@dataclass
class TableRecord:
    table_id: str
    protocol_id: str
    page_number: int
    grid: list[list[str]]
    context_text: str
    true_label: bool | None = None


@dataclass
class ProtocolDoc:
    protocol_id: str
    title: str
    tables: list[TableRecord] = field(default_factory=list)
    source_meta: dict[str, str] = field(default_factory=dict)


@dataclass
class JsonView:
    """Column-dict rendering: column index -> {row index (decimal string) -> cell}."""

    columns: dict[int, dict[str, str]]

    def to_json(self) -> str:
        """Canonical serialization: ascending column then row order."""
        obj = {
            str(c): dict(sorted(rows.items(), key=lambda kv: int(kv[0])))
            for c, rows in sorted(self.columns.items())
        }
        return json.dumps(obj, ensure_ascii=False)

    def cell_count(self) -> int:
        return sum(len(rows) for rows in self.columns.values())


@dataclass
class TextView:
    text: str


@dataclass
class SyntheticCorpusSpec:
    n_protocols: int
    tables_per_protocol: tuple[int, int] = (6, 12)
    positive_rate: float = 0.136
    seed: int = 0


def render_json_view(table: TableRecord) -> JsonView:
    """Transpose the cell grid into the column-dict JSON view.

    Ragged rows contribute only the cells they have; a missing cell is an
    absent key, while an empty-string cell is kept as an empty value.
    """
    if not table.grid:
        raise CorpusError("EMPTY_GRID", f"table {table.table_id!r} has an empty grid")
    columns: dict[int, dict[str, str]] = {}
    for r, row in enumerate(table.grid):
        for c, cell in enumerate(row):
            columns.setdefault(c, {})[str(r)] = cell
    return JsonView(columns={c: columns[c] for c in sorted(columns)})


def render_text_view(table: TableRecord) -> TextView:
    return TextView(text=table.context_text)


# --- JSONL interchange -------------------------------------------------------

_PROTOCOL_FIELDS = {"protocol_id", "title", "tables", "source_meta"}
_TABLE_FIELDS = {"table_id", "page_number", "grid", "context_text", "true_label"}


def _parse_table(raw: object, protocol_id: str, line_no: int) -> TableRecord:
    def bad(reason: str) -> CorpusError:
        return CorpusError("MALFORMED_LINE", f"line {line_no}: {reason}", line_no=line_no)

    if not isinstance(raw, dict):
        raise bad("table entry is not an object")
    unknown = set(raw) - _TABLE_FIELDS
    if unknown:
        raise bad(f"unknown table fields {sorted(unknown)}")
    missing = _TABLE_FIELDS - {"true_label"} - set(raw)
    if missing:
        raise bad(f"missing table fields {sorted(missing)}")
    table_id = raw["table_id"]
    if not isinstance(table_id, str) or not table_id:
        raise bad("table_id must be a non-empty string")
    page_number = raw["page_number"]
    if isinstance(page_number, bool) or not isinstance(page_number, int) or page_number < 1:
        raise bad(f"table {table_id!r}: page_number must be a positive integer")
    grid = raw["grid"]
    if not isinstance(grid, list) or not grid:
        raise CorpusError(
            "EMPTY_GRID", f"line {line_no}: table {table_id!r} grid must have >= 1 row",
            line_no=line_no,
        )
    for row in grid:
        if not isinstance(row, list) or not all(isinstance(c, str) for c in row):
            raise bad(f"table {table_id!r}: grid rows must be lists of strings")
    context_text = raw["context_text"]
    if not isinstance(context_text, str):
        raise bad(f"table {table_id!r}: context_text must be a string")
    true_label = raw.get("true_label")
    if true_label is not None and not isinstance(true_label, bool):
        raise bad(f"table {table_id!r}: true_label must be a boolean or null")
    return TableRecord(
        table_id=table_id,
        protocol_id=protocol_id,
        page_number=page_number,
        grid=[list(row) for row in grid],
        context_text=context_text,
        true_label=true_label,
    )


def _parse_protocol(line: str, line_no: int) -> ProtocolDoc:
    def bad(reason: str) -> CorpusError:
        return CorpusError("MALFORMED_LINE", f"line {line_no}: {reason}", line_no=line_no)

    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise bad(f"invalid JSON ({exc.msg})") from exc
    if not isinstance(raw, dict):
        raise bad("protocol record is not an object")
    unknown = set(raw) - _PROTOCOL_FIELDS
    if unknown:
        raise bad(f"unknown protocol fields {sorted(unknown)}")
    missing = {"protocol_id", "title", "tables"} - set(raw)
    if missing:
        raise bad(f"missing protocol fields {sorted(missing)}")
    protocol_id = raw["protocol_id"]
    if not isinstance(protocol_id, str) or not protocol_id:
        raise bad("protocol_id must be a non-empty string")
    if not isinstance(raw["title"], str):
        raise bad("title must be a string")
    if not isinstance(raw["tables"], list):
        raise bad("tables must be a list")
    source_meta = raw.get("source_meta", {})
    if not isinstance(source_meta, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in source_meta.items()
    ):
        raise bad("source_meta must map strings to strings")
    tables = [_parse_table(t, protocol_id, line_no) for t in raw["tables"]]
    return ProtocolDoc(
        protocol_id=protocol_id, title=raw["title"], tables=tables, source_meta=dict(source_meta)
    )


def ingest_corpus(path: str | Path) -> list[ProtocolDoc]:
    """Read and validate a JSONL corpus file; reject the whole file on any violation."""
    protocols: list[ProtocolDoc] = []
    seen_protocols: set[str] = set()
    seen_tables: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            doc = _parse_protocol(line, line_no)
            if doc.protocol_id in seen_protocols:
                raise CorpusError(
                    "DUPLICATE_ID", f"line {line_no}: duplicate protocol_id {doc.protocol_id!r}",
                    line_no=line_no,
                )
            seen_protocols.add(doc.protocol_id)
            for table in doc.tables:
                if table.table_id in seen_tables:
                    raise CorpusError(
                        "DUPLICATE_ID", f"line {line_no}: duplicate table_id {table.table_id!r}",
                        line_no=line_no,
                    )
                seen_tables.add(table.table_id)
            protocols.append(doc)
    return protocols


def serialize_corpus(protocols: list[ProtocolDoc], path: str | Path) -> None:
    """Write a corpus as JSONL, one protocol per line, round-trippable by ingest_corpus."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in protocols:
            record = {
                "protocol_id": doc.protocol_id,
                "title": doc.title,
                "tables": [
                    {
                        "table_id": t.table_id,
                        "page_number": t.page_number,
                        "grid": t.grid,
                        "context_text": t.context_text,
                        "true_label": t.true_label,
                    }
                    for t in doc.tables
                ],
                "source_meta": doc.source_meta,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


# --- synthetic corpus generator ----------------------------------------------

_VISIT_PHASES = ["Screening", "Baseline", "Treatment", "Follow-up"]
_SOE_ASSESSMENTS = [
    "Informed Consent",
    "Demographics",
    "Medical History",
    "Physical Examination",
    "Vital Signs",
    "Blood Chemistries",
    "Hematology",
    "Urine Analysis",
    "Randomization",
    "Treatment Administration",
    "Concomitant Medications",
    "Adverse Events",
    "Inclusion Exclusion Criteria",
]
_SOE_TITLES = [
    "Schedule of Events",
    "Schedule of Assessments",
    "Schedule of Activities",
    "Study Calendar",
    "Study Schedule",
]

_PK_ROWS = [
    "Pharmacokinetic Sample",
    "Plasma Concentration",
    "Immunogenicity Sample",
    "Pharmacodynamic Sample",
]
_PK_COLS = ["Pre-dose", "0h post-dose", "2h post-dose", "6h post-dose", "24h post-dose"]
_HISTORY_ROWS = ["Original Protocol", "Amendment 1", "Amendment 2", "Amendment 3"]
_OBJECTIVE_ROWS = [
    "Primary Objective",
    "Secondary Objective",
    "Exploratory Objective",
    "Primary Endpoint",
    "Secondary Endpoint",
]
_LAB_ROWS = [
    "Absolute Neutrophil Count",
    "Platelet Count",
    "Hemoglobin",
    "Serum Creatinine",
    "Total Bilirubin",
    "AST and ALT",
]
_DOSE_ROWS = [
    "Grade 1 Toxicity",
    "Grade 2 Toxicity",
    "Grade 3 Toxicity",
    "Grade 4 Toxicity",
]


def _visit_headers(rng: np.random.Generator, n_visits: int, terse: bool) -> list[str]:
    if terse:
        return [f"V{v + 1} Day {1 + 7 * v}" for v in range(n_visits)]
    out = []
    for v in range(n_visits):
        phase = _VISIT_PHASES[min(v, len(_VISIT_PHASES) - 1)]
        out.append(f"{phase} Visit {v + 1} Day {1 + 7 * v}")
    return out


def _soe_table(rng: np.random.Generator) -> tuple[list[list[str]], str]:
    n_visits = int(rng.integers(3, 7))
    header = ["Assessment"]
    header += _visit_headers(rng, n_visits, terse=False)
    n_rows = int(rng.integers(4, 9))
    picks = rng.choice(len(_SOE_ASSESSMENTS), size=n_rows, replace=False)
    grid = [header]
    for idx in picks:
        row = [_SOE_ASSESSMENTS[int(idx)]]
        row += ["X" if rng.random() < 0.6 else "" for _ in range(n_visits)]
        grid.append(row)
    title = _SOE_TITLES[int(rng.integers(0, len(_SOE_TITLES)))]
    return grid, title


def _distractor_table(rng: np.random.Generator) -> tuple[list[list[str]], str]:
    kind = int(rng.integers(0, 6))
    if kind == 0:
        header = ["Assessment"] + _PK_COLS
        if rng.random() < 0.5:
            header[1] = "Cycle 1 Day 1"
        grid = [header]
        for name in _PK_ROWS[: int(rng.integers(2, 5))]:
            grid.append([name] + ["X" if rng.random() < 0.5 else "" for _ in _PK_COLS])
        return grid, "Pharmacokinetic Collection Schedule"
    if kind == 1:
        grid = [["Version", "Date", "Summary of Changes"]]
        for name in _HISTORY_ROWS[: int(rng.integers(2, 5))]:
            grid.append([name, f"2020-0{int(rng.integers(1, 10))}-01", "Administrative changes"])
        return grid, "Document History"
    if kind == 2:
        grid = [["Objective", "Endpoint"]]
        for name in _OBJECTIVE_ROWS[: int(rng.integers(2, 6))]:
            grid.append([name, "Change from baseline outcome measure"])
        return grid, "Objectives and Endpoints"
    if kind == 3:
        grid = [["Laboratory Value", "Requirement"]]
        for name in _LAB_ROWS[: int(rng.integers(3, 7))]:
            grid.append([name, "Within normal limits"])
        return grid, "Adequate Organ Function Laboratory Values"
    if kind == 4:
        grid = [["Toxicity", "Dose Modification"]]
        for name in _DOSE_ROWS[: int(rng.integers(2, 5))]:
            grid.append([name, "Reduce dose or discontinue treatment"])
        return grid, "Dose Modifications for Toxicity"
    # Near-boundary negative: a lab draw calendar that borrows visit vocabulary.
    n_visits = int(rng.integers(3, 6))
    header = ["Laboratory Panel"] + _visit_headers(rng, n_visits, rng.random() < 0.5)
    grid = [header]
    for name in _LAB_ROWS[: int(rng.integers(2, 5))]:
        grid.append([name] + ["X" if rng.random() < 0.5 else "" for _ in range(n_visits)])
    return grid, "Laboratory Collection Calendar"


def _context_text(grid: list[list[str]], title: str, page: int, rng: np.random.Generator) -> str:
    cells = " ".join(c for row in grid for c in row if c)
    before = f"Section {int(rng.integers(1, 12))}. {title}. The following table appears on page {page}."
    after = "Refer to the study procedures section for additional detail."
    return f"{before}\nTable: {title}\n{cells}\n{after}"


def generate_synthetic_corpus(spec: SyntheticCorpusSpec) -> list[ProtocolDoc]:
    """Deterministically generate a labeled corpus for offline runs.

    Positive tables carry visit-phase and consent vocabulary; negatives are
    drawn from the distractor archetypes (pharmacokinetic collections,
    document history, objectives, lab values, dose modifications).
    """
    lo, hi = spec.tables_per_protocol
    if (
        spec.n_protocols < 0
        or lo < 1
        or hi < lo
        or not 0.0 <= spec.positive_rate <= 1.0
    ):
        raise CorpusError("INVALID_SPEC", f"invalid synthetic corpus spec: {spec}")
    rng = np.random.default_rng(spec.seed)
    protocols: list[ProtocolDoc] = []
    for p in range(spec.n_protocols):
        protocol_id = f"SYN-{spec.seed:x}-{p:05d}"
        n_tables = int(rng.integers(lo, hi + 1))
        tables = []
        for t in range(n_tables):
            positive = bool(rng.random() < spec.positive_rate)
            grid, title = _soe_table(rng) if positive else _distractor_table(rng)
            page = int(rng.integers(1, 150))
            table_id = f"{protocol_id}-T{t:03d}"
            tables.append(
                TableRecord(
                    table_id=table_id,
                    protocol_id=protocol_id,
                    page_number=page,
                    grid=grid,
                    context_text=_context_text(grid, title, page, rng),
                    true_label=positive,
                )
            )
        protocols.append(
            ProtocolDoc(
                protocol_id=protocol_id,
                title=f"Synthetic Protocol {p:05d}",
                tables=tables,
                source_meta={"generator": "synthetic", "seed": str(spec.seed)},
            )
        )
    return protocols
