"""Labeling layer: prompt templates, verdict parsing, the seeded noise model,
labeler transports, and the annotation store."""
from __future__ import annotations

import itertools
import math
from pathlib import Path

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from soepipe.corpus import JsonView, TextView, render_json_view
from soepipe.labeling import (
    JSON_PROMPT_TEMPLATE,
    TEXT_PROMPT_TEMPLATE,
    Annotation,
    AnnotationSource,
    AnnotationStore,
    HttpLabeler,
    LabelingError,
    NoiseModel,
    SimulatedLabeler,
    Verdict,
    View,
    annotate_table,
    annotate_tables,
    build_prompt,
    parse_verdict,
    simulate_verdicts,
)

from conftest import make_annotation, make_table

GOLDEN = Path(__file__).parent / "golden"


# --- prompt templates ---------------------------------------------------------


def test_json_template_matches_golden_bytes():
    assert JSON_PROMPT_TEMPLATE.body == (GOLDEN / "json_prompt.txt").read_text(encoding="utf-8")


def test_text_template_matches_golden_bytes():
    assert TEXT_PROMPT_TEMPLATE.body == (GOLDEN / "text_prompt.txt").read_text(encoding="utf-8")


def test_build_prompt_substitutes_only_the_slot():
    sentinel = "@@CONTENT-SENTINEL@@"
    golden = (GOLDEN / "json_prompt.txt").read_text(encoding="utf-8")
    out = build_prompt(JSON_PROMPT_TEMPLATE, JsonView(columns={0: {"0": sentinel}}))
    expected = golden.replace("{table}", f'{{"0": {{"0": "{sentinel}"}}}}', 1)
    assert out == expected

    golden_t = (GOLDEN / "text_prompt.txt").read_text(encoding="utf-8")
    out_t = build_prompt(TEXT_PROMPT_TEMPLATE, TextView(text=sentinel))
    assert out_t == golden_t.replace("{text}", sentinel, 1)


def test_prompt_tails_are_exact():
    assert JSON_PROMPT_TEMPLATE.body.endswith("Your answer (One of YES or NO):")
    assert TEXT_PROMPT_TEMPLATE.body.endswith("Your answer (YES or NO):")


def test_build_prompt_kind_mismatch():
    with pytest.raises(LabelingError) as exc:
        build_prompt(JSON_PROMPT_TEMPLATE, TextView(text="x"))
    assert exc.value.code == "KIND_MISMATCH"
    with pytest.raises(LabelingError) as exc:
        build_prompt(TEXT_PROMPT_TEMPLATE, JsonView(columns={}))
    assert exc.value.code == "KIND_MISMATCH"


# --- verdict parsing ----------------------------------------------------------


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("YES", Verdict.YES),
        ("yes", Verdict.YES),
        ("Yes.", Verdict.YES),
        ('"YES"', Verdict.YES),
        ("  YES\n", Verdict.YES),
        ("YES, because the table lists visits.", Verdict.YES),
        ("NO", Verdict.NO),
        ("no!", Verdict.NO),
        ("(no)", Verdict.NO),
        ("No idea, but I'll say NO", Verdict.NO),
        ("", Verdict.UNKNOWN),
        ("   ", Verdict.UNKNOWN),
        ("maybe", Verdict.UNKNOWN),
        ("I think YES", Verdict.UNKNOWN),  # first token decides
        ("YESNO", Verdict.UNKNOWN),
        ("N0", Verdict.UNKNOWN),
    ],
)
def test_parse_verdict_table(raw, expected):
    assert parse_verdict(raw) is expected


@given(st.text(max_size=80))
def test_parse_verdict_total(raw):
    assert parse_verdict(raw) in (Verdict.YES, Verdict.NO, Verdict.UNKNOWN)


# --- noise model --------------------------------------------------------------


def test_noise_model_validation():
    with pytest.raises(LabelingError) as exc:
        NoiseModel(1.2, 0.8, 0.8, 0.8)
    assert exc.value.code == "INVALID_MODEL"
    with pytest.raises(LabelingError):
        NoiseModel.uniform(accuracy=0.9, rho=-0.5)


def test_simulate_verdicts_deterministic():
    model = NoiseModel.uniform(accuracy=0.8, rho=0.3, seed=4)
    a = simulate_verdicts(model, True, "TBL-1")
    b = simulate_verdicts(model, True, "TBL-1")
    assert a == b
    c = simulate_verdicts(NoiseModel.uniform(accuracy=0.8, rho=0.3, seed=5), True, "TBL-1")
    d = [simulate_verdicts(model, True, f"TBL-{i}") for i in range(50)]
    assert len(set(d)) > 1  # table_id varies the draw
    assert isinstance(c, tuple)


def _binomial_ci99(p: float, n: int) -> float:
    # 99% normal-approximation half-width
    return 2.576 * math.sqrt(p * (1 - p) / n)


@pytest.mark.parametrize("accuracy", [0.7, 0.85, 0.95])
@pytest.mark.parametrize("true_label", [True, False])
def test_per_view_marginal_accuracy_converges(accuracy, true_label):
    n = 20_000
    model = NoiseModel.uniform(accuracy=accuracy, rho=0.4, seed=11)
    want = Verdict.YES if true_label else Verdict.NO
    hits_json = hits_text = 0
    for i in range(n):
        jv, tv = simulate_verdicts(model, true_label, f"T{i}")
        hits_json += jv is want
        hits_text += tv is want
    half = _binomial_ci99(accuracy, n)
    assert abs(hits_json / n - accuracy) < half
    assert abs(hits_text / n - accuracy) < half


def test_agreement_monotone_in_correlation():
    n = 20_000
    rates = []
    for rho in (0.0, 0.25, 0.5, 0.75, 1.0):
        model = NoiseModel(0.9, 0.75, 0.7, 0.85, rho, seed=3)
        agree = sum(
            jv is tv
            for jv, tv in (simulate_verdicts(model, i % 3 == 0, f"T{i}") for i in range(n))
        )
        rates.append(agree / n)
    for lo, hi in itertools.pairwise(rates):
        assert hi >= lo - 0.01  # monotone up to sampling jitter


def test_full_correlation_matched_params_always_agrees():
    model = NoiseModel.uniform(accuracy=0.7, rho=1.0, seed=9)
    for i in range(2_000):
        jv, tv = simulate_verdicts(model, i % 2 == 0, f"T{i}")
        assert jv is tv


def test_consensus_example_probabilities():
    # accuracy 0.85, independent views: both-correct 0.7225,
    # correct-given-agreement 0.85^2 / (0.85^2 + 0.15^2).
    n = 60_000
    model = NoiseModel.uniform(accuracy=0.85, rho=0.0, seed=21)
    both_correct = agree = agree_correct = 0
    for i in range(n):
        true_label = i % 2 == 0
        want = Verdict.YES if true_label else Verdict.NO
        jv, tv = simulate_verdicts(model, true_label, f"T{i}")
        both_correct += jv is want and tv is want
        if jv is tv:
            agree += 1
            agree_correct += jv is want
    assert both_correct / n == pytest.approx(0.7225, abs=0.005)
    assert agree_correct / agree == pytest.approx(0.9698, abs=0.005)


# --- labelers -----------------------------------------------------------------


def test_simulated_labeler_responds_with_view_verdict():
    table = make_table(label=True)
    labeler = SimulatedLabeler(NoiseModel.uniform(accuracy=1.0, seed=0))
    assert labeler.respond("ignored", table, View.JSON_VIEW) == "YES"
    table_neg = make_table(table_id="T-NEG", label=False)
    assert labeler.respond("ignored", table_neg, View.TEXT_VIEW) == "NO"


def test_simulated_labeler_requires_truth():
    with pytest.raises(LabelingError) as exc:
        SimulatedLabeler(NoiseModel.uniform(accuracy=0.9)).respond(
            "p", make_table(label=None), View.JSON_VIEW
        )
    assert exc.value.code == "MISSING_TRUTH"


class _FlakyPost:
    def __init__(self, failures: int, payload: dict | None = None):
        self.failures = failures
        self.payload = payload or {"text": "YES"}
        self.calls: list[dict] = []

    def __call__(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers})
        if len(self.calls) <= self.failures:
            raise httpx.ConnectError("boom")
        request = httpx.Request("POST", url)
        return httpx.Response(200, json=self.payload, request=request)


def test_http_labeler_success_and_headers(monkeypatch):
    post = _FlakyPost(failures=0)
    monkeypatch.setattr(httpx, "post", post)
    labeler = HttpLabeler("http://svc:9/", token="tok-1")
    out = labeler.respond("PROMPT", make_table(), View.JSON_VIEW)
    assert out == "YES"
    call = post.calls[0]
    assert call["url"] == "http://svc:9/complete"  # trailing slash stripped
    assert call["json"] == {"prompt": "PROMPT"}
    assert call["headers"]["Authorization"] == "Bearer tok-1"


def test_http_labeler_retries_with_backoff(monkeypatch):
    post = _FlakyPost(failures=2)
    sleeps: list[float] = []
    monkeypatch.setattr(httpx, "post", post)
    monkeypatch.setattr("soepipe.labeling.time.sleep", sleeps.append)
    labeler = HttpLabeler("http://svc:9", max_attempts=3, backoff_s=0.5)
    assert labeler.respond("P", make_table(), View.JSON_VIEW) == "YES"
    assert len(post.calls) == 3
    assert sleeps == [0.5, 1.0]  # doubling backoff between attempts


def test_http_labeler_exhausts_to_none(monkeypatch):
    post = _FlakyPost(failures=99)
    monkeypatch.setattr(httpx, "post", post)
    monkeypatch.setattr("soepipe.labeling.time.sleep", lambda _s: None)
    labeler = HttpLabeler("http://svc:9", max_attempts=3)
    assert labeler.respond("P", make_table(), View.JSON_VIEW) is None
    assert len(post.calls) == 3


def test_http_labeler_from_env(monkeypatch):
    monkeypatch.delenv("LABELER_URL", raising=False)
    with pytest.raises(LabelingError) as exc:
        HttpLabeler.from_env()
    assert exc.value.code == "CONFIG_ERROR"
    monkeypatch.setenv("LABELER_URL", "http://svc:9")
    monkeypatch.setenv("LABELER_TOKEN", "tok")
    labeler = HttpLabeler.from_env()
    assert labeler.endpoint == "http://svc:9"
    assert labeler.token == "tok"


# --- annotate -----------------------------------------------------------------


class _DeadLabeler:
    labeler_id = "dead"

    def respond(self, prompt, table, view):
        return None


def test_annotate_table_fields_and_monotonic_timestamps():
    table = make_table(label=True)
    labeler = SimulatedLabeler(NoiseModel.uniform(accuracy=1.0, seed=0))
    json_ann, text_ann = annotate_table(labeler, table)
    assert json_ann.view is View.JSON_VIEW and text_ann.view is View.TEXT_VIEW
    assert json_ann.source is AnnotationSource.LLM_LABELER
    assert json_ann.table_id == text_ann.table_id == table.table_id
    assert json_ann.verdict is Verdict.YES
    assert text_ann.timestamp > json_ann.timestamp


def test_annotate_table_transport_failure_degrades_to_unknown():
    json_ann, text_ann = annotate_table(_DeadLabeler(), make_table())
    assert json_ann.verdict is Verdict.UNKNOWN
    assert text_ann.verdict is Verdict.UNKNOWN
    assert json_ann.raw_response == "<transport error: retries exhausted>"


def test_annotate_tables_merge_independent_of_concurrency():
    tables = [make_table(table_id=f"T-{i}", label=i % 3 == 0) for i in range(40)]
    labeler = SimulatedLabeler(NoiseModel.uniform(accuracy=0.8, seed=6))
    serial = annotate_tables(labeler, tables, max_in_flight=1)
    parallel = annotate_tables(labeler, tables, max_in_flight=8)
    assert set(serial) == set(parallel)
    assert len(serial) == 80  # two views per table
    for key in serial:
        assert serial[key].verdict is parallel[key].verdict


# --- store --------------------------------------------------------------------


def test_annotation_record_round_trip():
    ann = make_annotation("T-1", View.JSON_VIEW, Verdict.YES)
    assert Annotation.from_record(ann.to_record()) == ann
    human = make_annotation(
        "T-1", View.NA, Verdict.NO, source=AnnotationSource.HUMAN_EXPERT
    )
    assert Annotation.from_record(human.to_record()).view is View.NA


def test_store_append_load_latest(tmp_path):
    store = AnnotationStore(tmp_path / "ann.jsonl")
    first = make_annotation("T-1", View.JSON_VIEW, Verdict.NO, timestamp=1)
    second = make_annotation("T-1", View.JSON_VIEW, Verdict.YES, timestamp=2)
    other = make_annotation("T-2", View.TEXT_VIEW, Verdict.NO, timestamp=3)
    store.append(first)
    store.append_many([second, other])
    assert len(store.load()) == 3
    merged = store.latest_by_key()
    assert merged[("T-1", View.JSON_VIEW)].verdict is Verdict.YES  # last write wins
    assert merged[("T-2", View.TEXT_VIEW)].verdict is Verdict.NO


def test_store_load_missing_file(tmp_path):
    assert AnnotationStore(tmp_path / "absent.jsonl").load() == []
