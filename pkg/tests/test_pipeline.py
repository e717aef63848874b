"""Workflow engine: consensus, OR rule, labeling policies, splits, assembly."""
from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from soepipe.corpus import SyntheticCorpusSpec, generate_synthetic_corpus
from soepipe.labeling import NoiseModel, SimulatedLabeler, Verdict, View, annotate_tables
from soepipe.pipeline import (
    ConsensusStatus,
    LabelSource,
    LabelingPolicy,
    PipelineError,
    Split,
    SplitAssignment,
    ViewChoice,
    apply_policy,
    assemble_dataset,
    classify_or_rule,
    consensus,
    consensus_outcomes,
    export_examples,
    or_labels_from_pairs,
    pair_annotations,
    screen_tables,
    split_protocols,
)

from conftest import make_annotation, make_doc, make_table, make_verdict_pairs

VERDICTS = [Verdict.YES, Verdict.NO, Verdict.UNKNOWN]


# --- consensus ----------------------------------------------------------------


@pytest.mark.parametrize(
    "jv, tv, status, label",
    [
        (Verdict.YES, Verdict.YES, ConsensusStatus.AGREE, True),
        (Verdict.NO, Verdict.NO, ConsensusStatus.AGREE, False),
        (Verdict.YES, Verdict.NO, ConsensusStatus.DISAGREE, None),
        (Verdict.NO, Verdict.YES, ConsensusStatus.DISAGREE, None),
        (Verdict.UNKNOWN, Verdict.UNKNOWN, ConsensusStatus.DISAGREE, None),
        (Verdict.YES, Verdict.UNKNOWN, ConsensusStatus.DISAGREE, None),
        (Verdict.UNKNOWN, Verdict.NO, ConsensusStatus.DISAGREE, None),
    ],
)
def test_consensus_truth_table(jv, tv, status, label):
    oc = consensus(
        make_annotation("T-1", View.JSON_VIEW, jv),
        make_annotation("T-1", View.TEXT_VIEW, tv),
    )
    assert oc.status is status
    assert oc.agreed_label == label
    assert oc.table_id == "T-1"


def test_consensus_table_id_mismatch():
    with pytest.raises(PipelineError) as exc:
        consensus(
            make_annotation("T-1", View.JSON_VIEW, Verdict.YES),
            make_annotation("T-2", View.TEXT_VIEW, Verdict.YES),
        )
    assert exc.value.code == "TABLE_ID_MISMATCH"


def test_consensus_view_mismatch():
    with pytest.raises(PipelineError) as exc:
        consensus(
            make_annotation("T-1", View.TEXT_VIEW, Verdict.YES),
            make_annotation("T-1", View.JSON_VIEW, Verdict.YES),
        )
    assert exc.value.code == "VIEW_MISMATCH"


@pytest.mark.parametrize("jv", VERDICTS)
@pytest.mark.parametrize("tv", VERDICTS)
def test_or_rule_truth_table(jv, tv):
    expected = jv is Verdict.YES or tv is Verdict.YES
    assert classify_or_rule(jv, tv) is expected
    assert classify_or_rule(jv, tv) == classify_or_rule(tv, jv)  # symmetric


def test_pair_annotations_drops_incomplete():
    merged = {
        ("T-1", View.JSON_VIEW): make_annotation("T-1", View.JSON_VIEW, Verdict.YES),
        ("T-1", View.TEXT_VIEW): make_annotation("T-1", View.TEXT_VIEW, Verdict.NO),
        ("T-2", View.JSON_VIEW): make_annotation("T-2", View.JSON_VIEW, Verdict.YES),
    }
    pairs = pair_annotations(merged)
    assert set(pairs) == {"T-1"}  # T-2 is missing its text view


def test_consensus_outcomes_sorted_by_table_id():
    pairs = make_verdict_pairs(10, 3)
    outcomes = consensus_outcomes(pairs)
    assert [oc.table_id for oc in outcomes] == sorted(pairs)


# --- policies -----------------------------------------------------------------


def _policy_inputs(n_total: int, n_disagree: int):
    pairs = make_verdict_pairs(n_total, n_disagree)
    outcomes = consensus_outcomes(pairs)
    or_labels = or_labels_from_pairs(pairs)
    human = {oc.table_id: True for oc in outcomes if oc.status is ConsensusStatus.DISAGREE}
    return outcomes, or_labels, human


def test_fixture_accounting_2800_282():
    outcomes, or_labels, human = _policy_inputs(2800, 282)
    filtered = apply_policy(LabelingPolicy.FILTERED, outcomes, or_labels)
    hybrid = apply_policy(LabelingPolicy.HYBRID, outcomes, or_labels, human)
    everything = apply_policy(LabelingPolicy.ALL, outcomes, or_labels)
    assert len(filtered) == 2518
    assert len(hybrid) == 2800
    assert sum(lt.label_source is LabelSource.HUMAN for lt in hybrid) == 282
    assert len(everything) == 2800
    assert sum(lt.label_source is LabelSource.HUMAN for lt in everything) == 0


def test_policy_set_algebra():
    outcomes, or_labels, human = _policy_inputs(300, 40)
    filtered = {lt.table_id: lt for lt in apply_policy(LabelingPolicy.FILTERED, outcomes, or_labels)}
    everything = {lt.table_id: lt for lt in apply_policy(LabelingPolicy.ALL, outcomes, or_labels)}
    hybrid = {lt.table_id: lt for lt in apply_policy(LabelingPolicy.HYBRID, outcomes, or_labels, human)}
    assert set(filtered) <= set(everything)
    assert len(hybrid) == len(everything)
    for tid, lt in filtered.items():
        assert hybrid[tid].label == lt.label  # identical on AGREE tables
        assert hybrid[tid].label_source is LabelSource.LLM_CONSENSUS


def test_policy_label_sources():
    outcomes, or_labels, human = _policy_inputs(50, 10)
    for lt in apply_policy(LabelingPolicy.FILTERED, outcomes, or_labels):
        assert lt.label_source is LabelSource.LLM_CONSENSUS
    for lt in apply_policy(LabelingPolicy.ALL, outcomes, or_labels):
        assert lt.label_source in (LabelSource.LLM_CONSENSUS, LabelSource.LLM_OR_RULE)
    for lt in apply_policy(LabelingPolicy.HYBRID, outcomes, or_labels, human):
        assert lt.label_source in (LabelSource.LLM_CONSENSUS, LabelSource.HUMAN)


def test_all_policy_disagreements_get_or_labels():
    # Both-views-split disagreements always carry one YES, so the OR label is
    # True; that systematic positive bias is what FILTERED strips out.
    outcomes, or_labels, _ = _policy_inputs(100, 25)
    everything = apply_policy(LabelingPolicy.ALL, outcomes, or_labels)
    by_id = {lt.table_id: lt for lt in everything}
    for oc in outcomes:
        if oc.status is ConsensusStatus.DISAGREE:
            assert by_id[oc.table_id].label is True
            assert by_id[oc.table_id].label_source is LabelSource.LLM_OR_RULE


def test_hybrid_missing_human_label():
    outcomes, or_labels, human = _policy_inputs(20, 5)
    human.popitem()
    with pytest.raises(PipelineError) as exc:
        apply_policy(LabelingPolicy.HYBRID, outcomes, or_labels, human)
    assert exc.value.code == "MISSING_HUMAN_LABEL"


def test_all_missing_or_label():
    outcomes, or_labels, _ = _policy_inputs(20, 5)
    or_labels.clear()
    with pytest.raises(PipelineError) as exc:
        apply_policy(LabelingPolicy.ALL, outcomes, or_labels)
    assert exc.value.code == "MISSING_OR_LABEL"


@given(
    st.lists(
        st.tuples(st.sampled_from(VERDICTS), st.sampled_from(VERDICTS)),
        min_size=1,
        max_size=60,
    )
)
def test_policy_invariants_property(verdict_pairs):
    pairs = {
        f"T-{i:03d}": (
            make_annotation(f"T-{i:03d}", View.JSON_VIEW, jv),
            make_annotation(f"T-{i:03d}", View.TEXT_VIEW, tv),
        )
        for i, (jv, tv) in enumerate(verdict_pairs)
    }
    outcomes = consensus_outcomes(pairs)
    or_labels = or_labels_from_pairs(pairs)
    human = {oc.table_id: False for oc in outcomes if oc.status is ConsensusStatus.DISAGREE}
    filtered = apply_policy(LabelingPolicy.FILTERED, outcomes, or_labels)
    everything = apply_policy(LabelingPolicy.ALL, outcomes, or_labels)
    hybrid = apply_policy(LabelingPolicy.HYBRID, outcomes, or_labels, human)
    assert {lt.table_id for lt in filtered} <= {lt.table_id for lt in everything}
    assert len(hybrid) == len(everything) == len(verdict_pairs)
    # OR label symmetry against the stored pair order
    for tid, (j, t) in pairs.items():
        assert or_labels[tid] == classify_or_rule(t.verdict, j.verdict)


# --- screening ----------------------------------------------------------------


def test_screen_keeps_or_rule_positives():
    docs = [
        make_doc(
            "P-1",
            [make_table("T-POS", "P-1", label=True), make_table("T-NEG", "P-1", label=False)],
        )
    ]
    screener = SimulatedLabeler(NoiseModel.uniform(accuracy=1.0, rho=1.0, seed=0))
    kept = screen_tables(screener, docs)
    assert kept == {"T-POS"}


def test_screen_fraction_example():
    # High-recall base screener (sens 0.97, spec 0.80, one effective draw) on a
    # 13.6%-positive corpus keeps 0.136*0.97 + 0.864*0.20 = 0.305 of tables.
    docs = generate_synthetic_corpus(SyntheticCorpusSpec(n_protocols=300, seed=17))
    n_tables = sum(len(d.tables) for d in docs)
    screener = SimulatedLabeler(
        NoiseModel(0.97, 0.80, 0.97, 0.80, cross_view_correlation=1.0, seed=23),
        labeler_id="base-screener",
    )
    kept = screen_tables(screener, docs)
    assert len(kept) / n_tables == pytest.approx(0.30, abs=0.04)


# --- splits -------------------------------------------------------------------


def test_split_is_exhaustive_partition():
    ids = [f"P-{i}" for i in range(408)]
    split = split_protocols(ids, sizes=(300, 18, 90), seed=7)
    assert len(split.protocols_in(Split.TRAIN)) == 300
    assert len(split.protocols_in(Split.VALIDATION)) == 18
    assert len(split.protocols_in(Split.TEST)) == 90
    assert set(split.assignment) == set(ids)


def test_split_deterministic_and_seed_sensitive():
    ids = [f"P-{i}" for i in range(50)]
    a = split_protocols(ids, (35, 5, 10), seed=1)
    b = split_protocols(ids, (35, 5, 10), seed=1)
    c = split_protocols(ids, (35, 5, 10), seed=2)
    assert a.assignment == b.assignment
    assert a.assignment != c.assignment


def test_split_size_mismatch():
    with pytest.raises(PipelineError) as exc:
        split_protocols(["P-1", "P-2"], (2, 1, 0), seed=0)
    assert exc.value.code == "SIZE_MISMATCH"


def test_split_duplicate_ids():
    with pytest.raises(PipelineError) as exc:
        split_protocols(["P-1", "P-1"], (1, 1, 0), seed=0)
    assert exc.value.code == "SIZE_MISMATCH"


def test_split_json_round_trip():
    split = split_protocols([f"P-{i}" for i in range(10)], (6, 2, 2), seed=3)
    restored = SplitAssignment.from_json(split.to_json())
    assert restored == split


# --- assembly -----------------------------------------------------------------


def _assembly_fixture():
    tables = [make_table(f"T-{i}", "P-1", label=i % 2 == 0) for i in range(4)]
    docs = [make_doc("P-1", tables)]
    pairs = {
        t.table_id: (
            make_annotation(t.table_id, View.JSON_VIEW, Verdict.YES),
            make_annotation(t.table_id, View.TEXT_VIEW, Verdict.YES),
        )
        for t in tables
    }
    outcomes = consensus_outcomes(pairs)
    labels = apply_policy(LabelingPolicy.FILTERED, outcomes, or_labels_from_pairs(pairs))
    split = split_protocols(["P-1"], (1, 0, 0), seed=0)
    return labels, docs, split


def test_assemble_both_views_doubles_examples():
    labels, docs, split = _assembly_fixture()
    both = assemble_dataset(labels, docs, split, ViewChoice.BOTH)
    single = assemble_dataset(labels, docs, split, ViewChoice.JSON_VIEW)
    assert len(both) == 2 * len(labels)
    assert len(single) == len(labels)


def test_assemble_consensus_scale_doubling():
    # 2518 consensus-kept labels contribute 5036 two-view examples.
    pairs = make_verdict_pairs(2800, 282)
    outcomes = consensus_outcomes(pairs)
    labels = apply_policy(LabelingPolicy.FILTERED, outcomes, or_labels_from_pairs(pairs))
    tables = [make_table(tid, "P-1", label=True) for tid in sorted(pairs)]
    docs = [make_doc("P-1", tables)]
    split = split_protocols(["P-1"], (1, 0, 0), seed=0)
    examples = assemble_dataset(labels, docs, split, ViewChoice.BOTH)
    assert len(examples) == 5036


def test_assemble_example_contents():
    labels, docs, split = _assembly_fixture()
    examples = assemble_dataset(labels, docs, split, ViewChoice.BOTH)
    ex = examples[0]
    assert ex.split == "TRAIN"
    assert ex.protocol_id == "P-1"
    assert ex.target in ("YES", "NO")
    assert "Your answer" in ex.input_text
    # deterministic ordering by (protocol, table, view)
    keys = [(e.protocol_id, e.table_id) for e in examples]
    assert keys == sorted(keys)


def test_assemble_unknown_table():
    labels, docs, split = _assembly_fixture()
    from soepipe.pipeline import LabeledTable

    bad = labels + [LabeledTable("T-MISSING", True, LabelSource.LLM_CONSENSUS, LabelingPolicy.FILTERED)]
    with pytest.raises(PipelineError) as exc:
        assemble_dataset(bad, docs, split)
    assert exc.value.code == "UNKNOWN_TABLE"


def test_assemble_missing_split():
    labels, docs, _ = _assembly_fixture()
    empty_split = SplitAssignment(assignment={}, seed=0, sizes=(0, 0, 0))
    with pytest.raises(PipelineError) as exc:
        assemble_dataset(labels, docs, empty_split)
    assert exc.value.code == "MISSING_SPLIT"


def test_export_examples_schema(tmp_path):
    labels, docs, split = _assembly_fixture()
    examples = assemble_dataset(labels, docs, split)
    path = tmp_path / "dataset.jsonl"
    export_examples(examples, path)
    lines = [json.loads(l) for l in path.read_text(encoding="utf-8").splitlines()]
    assert len(lines) == len(examples)
    assert set(lines[0]) == {"input_text", "target", "table_id", "protocol_id", "split"}


# --- simulated end-to-end pairing --------------------------------------------


def test_annotation_flow_to_outcomes():
    docs = generate_synthetic_corpus(SyntheticCorpusSpec(n_protocols=20, seed=2))
    tables = [t for d in docs for t in d.tables]
    labeler = SimulatedLabeler(NoiseModel.uniform(accuracy=0.85, seed=5))
    merged = annotate_tables(labeler, tables, max_in_flight=4)
    pairs = pair_annotations(merged)
    assert set(pairs) == {t.table_id for t in tables}
    outcomes = consensus_outcomes(pairs)
    statuses = {oc.status for oc in outcomes}
    assert statuses == {ConsensusStatus.AGREE, ConsensusStatus.DISAGREE}
