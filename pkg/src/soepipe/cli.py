"""Stage-oriented command line: ingest | screen | annotate | filter | assemble
| train | evaluate | ensemble | serve | simulate.

Artifacts live under --out-dir; every stage hashes its inputs and outputs into
manifest.json. Exit codes: 0 ok, 1 config error, 2 missing dependency,
3 runtime failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .corpus import (
    CorpusError,
    SyntheticCorpusSpec,
    generate_synthetic_corpus,
    ingest_corpus,
    render_json_view,
    render_text_view,
    serialize_corpus,
)
from .ensemble import EnsembleConfig, EnsembleError, export_sweep_csv, sweep_thresholds
from .evaluation import (
    MetricsMode,
    attach_bootstrap_cis,
    compute_metrics,
    counts_from_items,
    macro_metrics,
)
from .labeling import (
    Annotation,
    AnnotationStore,
    HttpLabeler,
    LabelingError,
    NoiseModel,
    SimulatedLabeler,
    Verdict,
    View,
    annotate_tables,
)
from .manifest import ManifestStore, atomic_write_json, atomic_write_text
from .pipeline import (
    ConsensusOutcome,
    ConsensusStatus,
    LabelingPolicy,
    PipelineError,
    Split,
    SplitAssignment,
    ViewChoice,
    apply_policy,
    assemble_dataset,
    consensus_outcomes,
    or_labels_from_pairs,
    pair_annotations,
    screen_tables,
    split_protocols,
)
from .proxy import (
    DEFAULT_DIM,
    DEFAULT_EPOCHS,
    DEFAULT_L2,
    DEFAULT_LEARNING_RATE,
    fit_texts,
    load_model,
    save_model,
    score_texts,
)

EXIT_CONFIG = 1
EXIT_MISSING_DEP = 2
EXIT_RUNTIME = 3


def _fail(exit_code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(exit_code)


def _load_corpus(out_dir: Path):
    path = out_dir / "corpus.jsonl"
    if not path.exists():
        _fail(EXIT_MISSING_DEP, f"MISSING_DEPENDENCY(ingest): {path} not found")
    try:
        return ingest_corpus(path)
    except CorpusError as exc:
        _fail(EXIT_RUNTIME, f"{exc.code}: {exc}")


def _noise_model(accuracy, sens_json, spec_json, sens_text, spec_text, rho, seed) -> NoiseModel:
    try:
        if accuracy is not None:
            return NoiseModel.uniform(accuracy, rho, seed)
        vals = [sens_json, spec_json, sens_text, spec_text]
        if any(v is None for v in vals):
            _fail(
                EXIT_CONFIG,
                "CONFIG_ERROR: pass --accuracy or all four of "
                "--sens-json --spec-json --sens-text --spec-text",
            )
        return NoiseModel(*vals, cross_view_correlation=rho, seed=seed)
    except LabelingError as exc:
        _fail(EXIT_CONFIG, f"{exc.code}: {exc}")


def _make_labeler(labeler_url, labeler_id, noise, token=None):
    if labeler_url:
        return HttpLabeler(labeler_url, token=token, labeler_id=labeler_id)
    return SimulatedLabeler(noise, labeler_id=labeler_id)


def _noise_options(fn):
    for deco in reversed(
        [
            click.option("--accuracy", type=float, default=None,
                         help="Shorthand: same sensitivity/specificity for both views."),
            click.option("--sens-json", type=float, default=None),
            click.option("--spec-json", type=float, default=None),
            click.option("--sens-text", type=float, default=None),
            click.option("--spec-text", type=float, default=None),
            click.option("--rho", type=float, default=0.0,
                         help="Cross-view error correlation in [0,1]."),
            click.option("--noise-seed", type=int, default=0),
        ]
    ):
        fn = deco(fn)
    return fn


@click.group()
@click.version_option(version=__version__, prog_name="soepipe")
def main():
    """Weak-supervision table labeling pipeline."""


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
def ingest(corpus_path, out_dir):
    """Validate a JSONL corpus and normalize it into the run directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        protocols = ingest_corpus(corpus_path)
    except CorpusError as exc:
        _fail(EXIT_RUNTIME, f"{exc.code}: {exc}")
    target = out / "corpus.jsonl"
    tmp = target.with_suffix(".jsonl.tmp")
    serialize_corpus(protocols, tmp)
    tmp.replace(target)
    manifest = ManifestStore(out, __version__)
    manifest.record_stage(
        "ingest",
        inputs=[corpus_path],
        outputs=[target],
        params={},
        stats={
            "protocols": len(protocols),
            "tables": sum(len(p.tables) for p in protocols),
        },
    )
    click.echo(f"ingested {len(protocols)} protocols -> {target}")


@main.command()
@click.option("--out-dir", required=True, type=click.Path())
@_noise_options
@click.option("--labeler-url", default=None, help="HTTP screener endpoint; overrides noise model.")
@click.option("--labeler-id", default="screener")
def screen(out_dir, accuracy, sens_json, spec_json, sens_text, spec_text, rho, noise_seed,
           labeler_url, labeler_id):
    """Run the high-recall screening pass; keep OR-rule positives."""
    out = Path(out_dir)
    protocols = _load_corpus(out)
    noise = None
    if not labeler_url:
        noise = _noise_model(accuracy, sens_json, spec_json, sens_text, spec_text, rho, noise_seed)
    screener = _make_labeler(labeler_url, labeler_id, noise)
    try:
        kept = screen_tables(screener, protocols, max_in_flight=1 if noise else 8)
    except LabelingError as exc:
        _fail(EXIT_RUNTIME, f"{exc.code}: {exc}")
    total = sum(len(p.tables) for p in protocols)
    target = out / "screened.json"
    atomic_write_json(target, sorted(kept))
    ManifestStore(out, __version__).record_stage(
        "screen",
        inputs=[out / "corpus.jsonl"],
        outputs=[target],
        params={"labeler_id": labeler_id, "rho": rho, "seed": noise_seed},
        stats={"screened": len(kept), "total": total,
               "fraction": round(len(kept) / total, 6) if total else 0.0},
    )
    click.echo(f"screened {len(kept)} / {total} tables -> {target}")


@main.command()
@click.option("--out-dir", required=True, type=click.Path())
@_noise_options
@click.option("--labeler-url", default=None, help="HTTP labeler endpoint; overrides noise model.")
@click.option("--labeler-id", default="labeler")
@click.option("--respect-screen/--no-screen", default=True,
              help="Annotate only screened tables (default) or every table.")
@click.option("--append/--overwrite", default=False,
              help="Append to annotations.jsonl instead of replacing it.")
def annotate(out_dir, accuracy, sens_json, spec_json, sens_text, spec_text, rho, noise_seed,
             labeler_url, labeler_id, respect_screen, append):
    """Collect one verdict per view for each table in scope."""
    out = Path(out_dir)
    protocols = _load_corpus(out)
    tables = [t for p in protocols for t in p.tables]
    if respect_screen:
        screened_path = out / "screened.json"
        if not screened_path.exists():
            _fail(
                EXIT_MISSING_DEP,
                f"MISSING_DEPENDENCY(screen): {screened_path} not found (or pass --no-screen)",
            )
        keep = set(json.loads(screened_path.read_text(encoding="utf-8")))
        tables = [t for t in tables if t.table_id in keep]
    noise = None
    if not labeler_url:
        noise = _noise_model(accuracy, sens_json, spec_json, sens_text, spec_text, rho, noise_seed)
    labeler = _make_labeler(labeler_url, labeler_id, noise)
    try:
        merged = annotate_tables(labeler, tables, max_in_flight=1 if noise else 8)
    except LabelingError as exc:
        _fail(EXIT_RUNTIME, f"{exc.code}: {exc}")
    target = out / "annotations.jsonl"
    ordered = [merged[(t.table_id, view)] for t in tables
               for view in (View.JSON_VIEW, View.TEXT_VIEW)]
    lines = "".join(json.dumps(a.to_record(), ensure_ascii=False) + "\n" for a in ordered)
    if append and target.exists():
        with open(target, "a", encoding="utf-8") as fh:
            fh.write(lines)
    else:
        atomic_write_text(target, lines)
    ManifestStore(out, __version__).record_stage(
        "annotate",
        inputs=[out / "corpus.jsonl"],
        outputs=[target],
        params={"labeler_id": labeler_id, "rho": rho, "seed": noise_seed,
                "respect_screen": respect_screen},
        stats={"tables_annotated": len(tables)},
    )
    click.echo(f"annotated {len(tables)} tables -> {target}")


@main.command("filter")
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--labeler-id", default=None,
              help="Restrict to one labeler's annotations (default: latest per view).")
def filter_cmd(out_dir, labeler_id):
    """Consensus-filter annotation pairs into AGREE/DISAGREE outcomes."""
    out = Path(out_dir)
    ann_path = out / "annotations.jsonl"
    if not ann_path.exists():
        _fail(EXIT_MISSING_DEP, f"MISSING_DEPENDENCY(annotate): {ann_path} not found")
    store = AnnotationStore(ann_path)
    annotations = store.load()
    if labeler_id is not None:
        annotations = [a for a in annotations if a.annotator_id == labeler_id]
    merged: dict[tuple[str, View], Annotation] = {}
    for ann in annotations:
        merged[(ann.table_id, ann.view)] = ann
    pairs = pair_annotations(merged)
    try:
        outcomes = consensus_outcomes(pairs)
    except PipelineError as exc:
        _fail(EXIT_RUNTIME, f"{exc.code}: {exc}")
    or_labels = or_labels_from_pairs(pairs)
    kept = sum(1 for oc in outcomes if oc.status is ConsensusStatus.AGREE)
    outcome_path = out / "outcomes.json"
    atomic_write_json(
        outcome_path,
        [
            {"table_id": oc.table_id, "status": oc.status.value, "agreed_label": oc.agreed_label}
            for oc in outcomes
        ],
    )
    or_path = out / "or_labels.json"
    atomic_write_json(or_path, dict(sorted(or_labels.items())))
    verdict_path = out / "verdict_pairs.json"
    atomic_write_json(
        verdict_path,
        {tid: [j.verdict.value, t.verdict.value] for tid, (j, t) in sorted(pairs.items())},
    )
    ManifestStore(out, __version__).record_stage(
        "filter",
        inputs=[ann_path],
        outputs=[outcome_path, or_path, verdict_path],
        params={"labeler_id": labeler_id},
        stats={"pairs": len(outcomes), "kept": kept, "disagreements": len(outcomes) - kept},
    )
    click.echo(
        f"consensus: kept={kept} disagreements={len(outcomes) - kept} -> {outcome_path}"
    )


def _load_outcomes(out: Path) -> list[ConsensusOutcome]:
    path = out / "outcomes.json"
    if not path.exists():
        _fail(EXIT_MISSING_DEP, f"MISSING_DEPENDENCY(filter): {path} not found")
    raw = json.loads(path.read_text(encoding="utf-8"))
    return [
        ConsensusOutcome(r["table_id"], ConsensusStatus(r["status"]), r["agreed_label"])
        for r in raw
    ]


def _ensure_split(out: Path, protocols, sizes_opt: str | None, frac_opt: str, seed: int):
    path = out / "split.json"
    if path.exists():
        return SplitAssignment.from_json(path.read_text(encoding="utf-8"))
    ids = [p.protocol_id for p in protocols]
    if sizes_opt:
        try:
            sizes = tuple(int(s) for s in sizes_opt.split(","))
        except ValueError:
            _fail(EXIT_CONFIG, f"CONFIG_ERROR: bad --split-sizes {sizes_opt!r}")
    else:
        try:
            fracs = [float(s) for s in frac_opt.split(",")]
            assert len(fracs) == 3
        except (ValueError, AssertionError):
            _fail(EXIT_CONFIG, f"CONFIG_ERROR: bad --split-frac {frac_opt!r}")
        n = len(ids)
        n_train = int(round(fracs[0] * n))
        n_val = int(round(fracs[1] * n))
        sizes = (n_train, n_val, n - n_train - n_val)
    try:
        split = split_protocols(ids, sizes, seed)
    except PipelineError as exc:
        _fail(EXIT_CONFIG, f"{exc.code}: {exc}")
    atomic_write_text(path, split.to_json() + "\n")
    return split


@main.command()
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--policy", type=click.Choice(["all", "filtered", "hybrid"]), required=True)
@click.option("--view", type=click.Choice(["json", "text", "both"]), default="both")
@click.option("--split-sizes", default=None, help="Exact train,val,test counts, e.g. 300,18,90.")
@click.option("--split-frac", default="0.7,0.1,0.2", show_default=True)
@click.option("--split-seed", type=int, default=7)
@click.option("--review-data", type=click.Path(), default=None,
              help="Review service data dir supplying human labels (hybrid).")
@click.option("--human-from-truth", is_flag=True, default=False,
              help="Hybrid only: take human labels from corpus ground truth (synthetic runs).")
def assemble(out_dir, policy, view, split_sizes, split_frac, split_seed, review_data,
             human_from_truth):
    """Apply a labeling policy and export the fine-tune dataset."""
    out = Path(out_dir)
    protocols = _load_corpus(out)
    outcomes = _load_outcomes(out)
    or_path = out / "or_labels.json"
    if not or_path.exists():
        _fail(EXIT_MISSING_DEP, f"MISSING_DEPENDENCY(filter): {or_path} not found")
    or_labels = json.loads(or_path.read_text(encoding="utf-8"))
    pol = LabelingPolicy(policy.upper())
    human_labels: dict[str, bool] = {}
    if pol is LabelingPolicy.HYBRID:
        disagree = [oc.table_id for oc in outcomes if oc.status is ConsensusStatus.DISAGREE]
        if human_from_truth:
            truth = {t.table_id: t.true_label for p in protocols for t in p.tables}
            human_labels = {tid: bool(truth[tid]) for tid in disagree if truth.get(tid) is not None}
        elif review_data:
            from .review import ReviewStore

            human_labels = ReviewStore(review_data).export_human_labels()
        unresolved = [tid for tid in disagree if tid not in human_labels]
        if unresolved:
            _fail(
                EXIT_MISSING_DEP,
                f"MISSING_DEPENDENCY(review): {len(unresolved)} disagreement tables "
                "lack human labels",
            )
    try:
        labels = apply_policy(pol, outcomes, or_labels, human_labels)
    except PipelineError as exc:
        _fail(EXIT_MISSING_DEP if exc.code == "MISSING_HUMAN_LABEL" else EXIT_RUNTIME,
              f"{exc.code}: {exc}")
    split = _ensure_split(out, protocols, split_sizes, split_frac, split_seed)
    view_choice = {"json": ViewChoice.JSON_VIEW, "text": ViewChoice.TEXT_VIEW,
                   "both": ViewChoice.BOTH}[view]
    try:
        examples = assemble_dataset(labels, protocols, split, view_choice)
    except PipelineError as exc:
        _fail(EXIT_RUNTIME, f"{exc.code}: {exc}")
    labels_path = out / f"labels_{policy}.json"
    atomic_write_json(
        labels_path,
        [
            {"table_id": lt.table_id, "label": lt.label, "source": lt.label_source.value}
            for lt in sorted(labels, key=lambda lt: lt.table_id)
        ],
    )
    dataset_path = out / f"dataset_{policy}.jsonl"
    lines = "".join(
        json.dumps(
            {"input_text": ex.input_text, "target": ex.target, "table_id": ex.table_id,
             "protocol_id": ex.protocol_id, "split": ex.split},
            ensure_ascii=False,
        ) + "\n"
        for ex in examples
    )
    atomic_write_text(dataset_path, lines)
    n_human = sum(1 for lt in labels if lt.label_source.value == "HUMAN")
    ManifestStore(out, __version__).record_stage(
        f"assemble:{policy}",
        inputs=[out / "outcomes.json", or_path],
        outputs=[labels_path, dataset_path, out / "split.json"],
        params={"policy": policy, "view": view, "split_seed": split_seed},
        stats={"labels": len(labels), "human_labeled": n_human, "examples": len(examples)},
    )
    click.echo(f"{policy}: {len(labels)} labels ({n_human} human) -> {dataset_path}")


@main.command()
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--policy", type=click.Choice(["all", "filtered", "hybrid"]), required=True)
@click.option("--view", type=click.Choice(["json", "text", "both"]), default="both")
@click.option("--dim", type=int, default=DEFAULT_DIM, show_default=True)
@click.option("--epochs", type=int, default=DEFAULT_EPOCHS, show_default=True)
@click.option("--lr", type=float, default=DEFAULT_LEARNING_RATE, show_default=True)
@click.option("--l2", type=float, default=DEFAULT_L2, show_default=True)
@click.option("--train-seed", type=int, default=0)
def train(out_dir, policy, view, dim, epochs, lr, l2, train_seed):
    """Train the proxy classifier on TRAIN-split policy labels."""
    out = Path(out_dir)
    labels_path = out / f"labels_{policy}.json"
    split_path = out / "split.json"
    for needed in (labels_path, split_path):
        if not needed.exists():
            _fail(EXIT_MISSING_DEP, f"MISSING_DEPENDENCY(assemble): {needed} not found")
    protocols = _load_corpus(out)
    tables = {t.table_id: t for p in protocols for t in p.tables}
    split = SplitAssignment.from_json(split_path.read_text(encoding="utf-8"))
    view_choice = {"json": ViewChoice.JSON_VIEW, "text": ViewChoice.TEXT_VIEW,
                   "both": ViewChoice.BOTH}[view]
    texts, ys = [], []
    for row in json.loads(labels_path.read_text(encoding="utf-8")):
        table = tables.get(row["table_id"])
        if table is None:
            _fail(EXIT_RUNTIME, f"UNKNOWN_TABLE: {row['table_id']!r} not in corpus")
        if split.assignment.get(table.protocol_id) is not Split.TRAIN:
            continue
        for text in _table_text(table, view_choice):
            texts.append(text)
            ys.append(bool(row["label"]))
    if not texts:
        _fail(EXIT_RUNTIME, "EMPTY_TRAIN_SET: no TRAIN-split labeled tables")
    try:
        model = fit_texts(
            texts, ys, dim=dim, seed=train_seed, epochs=epochs, learning_rate=lr, l2=l2
        )
    except Exception as exc:
        _fail(EXIT_RUNTIME, str(exc))
    model_path = out / f"model_{policy}.json"
    tmp = model_path.with_suffix(".json.tmp")
    save_model(model, tmp)
    tmp.replace(model_path)
    ManifestStore(out, __version__).record_stage(
        f"train:{policy}",
        inputs=[labels_path, out / "corpus.jsonl"],
        outputs=[model_path],
        params={"view": view, "dim": dim, "epochs": epochs, "lr": lr, "l2": l2,
                "seed": train_seed},
        stats={"examples": len(ys), "final_loss": model.meta.loss_trace[-1]},
    )
    click.echo(f"trained {policy} proxy on {len(ys)} examples -> {model_path}")


def _table_text(table, view_choice: ViewChoice) -> list[str]:
    # Rendered views, not prompts: the proxy features cover only table content.
    texts = []
    if view_choice in (ViewChoice.JSON_VIEW, ViewChoice.BOTH):
        texts.append(render_json_view(table).to_json())
    if view_choice in (ViewChoice.TEXT_VIEW, ViewChoice.BOTH):
        texts.append(render_text_view(table).text)
    return texts


@main.command()
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--policy", type=click.Choice(["all", "filtered", "hybrid"]), required=True)
@click.option("--split", "split_name", type=click.Choice(["train", "validation", "test"]),
              default="test", show_default=True)
@click.option("--view", type=click.Choice(["json", "text", "both"]), default="both")
@click.option("--mode", type=click.Choice(["micro", "macro"]), default="macro", show_default=True)
@click.option("--bootstrap/--no-bootstrap", default=False)
@click.option("--replications", type=int, default=10_000, show_default=True)
@click.option("--level", type=float, default=0.95, show_default=True)
@click.option("--eval-seed", type=int, default=0)
def evaluate(out_dir, policy, split_name, view, mode, bootstrap, replications, level, eval_seed):
    """Score the trained proxy against ground truth on a held-out split."""
    out = Path(out_dir)
    model_path = out / f"model_{policy}.json"
    split_path = out / "split.json"
    for needed, stage in ((model_path, "train"), (split_path, "assemble")):
        if not needed.exists():
            _fail(EXIT_MISSING_DEP, f"MISSING_DEPENDENCY({stage}): {needed} not found")
    protocols = _load_corpus(out)
    model = load_model(model_path)
    split = SplitAssignment.from_json(split_path.read_text(encoding="utf-8"))
    target_split = Split(split_name.upper())
    view_choice = {"json": ViewChoice.JSON_VIEW, "text": ViewChoice.TEXT_VIEW,
                   "both": ViewChoice.BOTH}[view]
    items = []
    for p in protocols:
        if split.assignment.get(p.protocol_id) is not target_split:
            continue
        for t in p.tables:
            if t.true_label is None:
                continue
            texts = _table_text(t, view_choice)
            scores = score_texts(model, texts)
            items.append((bool(scores.mean() >= 0.5), t.true_label, p.protocol_id))
    if not items:
        _fail(EXIT_RUNTIME, f"EMPTY_SET: no labeled tables in the {split_name} split")
    if mode == "micro":
        report = compute_metrics(counts_from_items(items))
    else:
        report = macro_metrics(items)
    if bootstrap:
        attach_bootstrap_cis(report, items, replications=replications, level=level, seed=eval_seed)
    metrics_path = out / f"metrics_{policy}.json"
    atomic_write_json(metrics_path, report.to_dict())
    ManifestStore(out, __version__).record_stage(
        f"evaluate:{policy}",
        inputs=[model_path, out / "corpus.jsonl"],
        outputs=[metrics_path],
        params={"split": split_name, "view": view, "mode": mode,
                "bootstrap": bootstrap, "seed": eval_seed},
        stats={"items": len(items), "f1": report.f1, "accuracy": report.accuracy},
    )
    click.echo(
        f"{policy} {split_name} ({mode}): recall={report.recall:.4f} "
        f"precision={report.precision:.4f} f1={report.f1:.4f} accuracy={report.accuracy:.4f}"
    )


@main.command("ensemble")
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--channels", required=True,
              help="Comma list of labeler:view channels, e.g. a:json,a:text,b:json,b:text.")
@click.option("--mode", type=click.Choice(["micro", "macro"]), default="micro", show_default=True)
def ensemble_cmd(out_dir, channels, mode):
    """Sweep voting thresholds over annotation channels against ground truth."""
    out = Path(out_dir)
    protocols = _load_corpus(out)
    ann_path = out / "annotations.jsonl"
    if not ann_path.exists():
        _fail(EXIT_MISSING_DEP, f"MISSING_DEPENDENCY(annotate): {ann_path} not found")
    parsed = []
    for part in channels.split(","):
        bits = part.strip().rsplit(":", 1)
        if len(bits) != 2 or bits[1] not in ("json", "text"):
            _fail(EXIT_CONFIG, f"CONFIG_ERROR: bad channel {part!r}, want labeler:json|text")
        parsed.append((bits[0], View.JSON_VIEW if bits[1] == "json" else View.TEXT_VIEW))
    latest: dict[tuple[str, str, View], Verdict] = {}
    for ann in AnnotationStore(ann_path).load():
        latest[(ann.annotator_id, ann.table_id, ann.view)] = ann.verdict
    truth, protocol_of = {}, {}
    for p in protocols:
        for t in p.tables:
            if t.true_label is not None:
                truth[t.table_id] = t.true_label
                protocol_of[t.table_id] = p.protocol_id
    verdicts = {}
    for tid in truth:
        row = []
        for labeler, view in parsed:
            v = latest.get((labeler, tid, view))
            if v is not None:
                row.append(v)
        verdicts[tid] = row
    config = EnsembleConfig(
        channels=tuple((lab, v.value) for lab, v in parsed), threshold=1
    )
    eval_mode = MetricsMode.MICRO if mode == "micro" else MetricsMode.MACRO_PER_PROTOCOL
    try:
        results = sweep_thresholds(config, verdicts, truth, protocol_of, eval_mode)
    except EnsembleError as exc:
        _fail(EXIT_MISSING_DEP if exc.code == "MISSING_VERDICT" else EXIT_CONFIG,
              f"{exc.code}: {exc}")
    sweep_path = out / "ensemble_sweep.csv"
    tmp = sweep_path.with_suffix(".csv.tmp")
    export_sweep_csv(results, tmp)
    tmp.replace(sweep_path)
    ManifestStore(out, __version__).record_stage(
        "ensemble",
        inputs=[ann_path, out / "corpus.jsonl"],
        outputs=[sweep_path],
        params={"channels": channels, "mode": mode},
        stats={"thresholds": len(results),
               "best_f1": max(r.f1 for _, r in results)},
    )
    for k, report in results:
        click.echo(f"k={k}: recall={report.recall:.4f} precision={report.precision:.4f} "
                   f"f1={report.f1:.4f} accuracy={report.accuracy:.4f}")


@main.command()
@click.option("--data-dir", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8321, show_default=True)
@click.option("--claim-ttl", type=float, default=900.0, show_default=True,
              help="Claim lease in seconds.")
@click.option("--experts", default="", help="Comma list of expert annotator ids.")
@click.option("--enqueue-from", type=click.Path(), default=None,
              help="Run directory whose filter outcomes should be enqueued at startup.")
@click.option("--ui-dir", type=click.Path(), default=None,
              help="Static asset directory to serve at /ui.")
def serve(data_dir, host, port, claim_ttl, experts, enqueue_from, ui_dir):
    """Start the human review service."""
    from .review import ReviewStore
    from .service import serve as run_service

    store = ReviewStore(
        data_dir,
        claim_ttl_s=claim_ttl,
        experts={e.strip() for e in experts.split(",") if e.strip()},
    )
    if enqueue_from:
        run_dir = Path(enqueue_from)
        protocols = _load_corpus(run_dir)
        outcomes = _load_outcomes(run_dir)
        pairs_path = run_dir / "verdict_pairs.json"
        pairs = {}
        if pairs_path.exists():
            raw = json.loads(pairs_path.read_text(encoding="utf-8"))
            from .labeling import AnnotationSource

            def _ann(tid, view, value):
                return Annotation(tid, AnnotationSource.LLM_LABELER, view, Verdict(value),
                                  "labeler", 0)

            pairs = {
                tid: (_ann(tid, View.JSON_VIEW, v[0]), _ann(tid, View.TEXT_VIEW, v[1]))
                for tid, v in raw.items()
            }
        n = store.enqueue_disagreements(outcomes, protocols, pairs)
        click.echo(f"enqueued {n} disagreement tables")
    click.echo(f"review service on http://{host}:{port} (data: {data_dir})")
    run_service(store, host=host, port=port, ui_dir=ui_dir)


@main.command()
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--n-protocols", type=int, default=50, show_default=True)
@click.option("--tables-min", type=int, default=6, show_default=True)
@click.option("--tables-max", type=int, default=12, show_default=True)
@click.option("--positive-rate", type=float, default=0.136, show_default=True)
@click.option("--corpus-seed", type=int, default=0)
@_noise_options
@click.option("--labeler-id", default="labeler")
def simulate(out_dir, n_protocols, tables_min, tables_max, positive_rate, corpus_seed,
             accuracy, sens_json, spec_json, sens_text, spec_text, rho, noise_seed, labeler_id):
    """Generate a synthetic labeled corpus and noisy annotations in one step."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        protocols = generate_synthetic_corpus(
            SyntheticCorpusSpec(
                n_protocols=n_protocols,
                tables_per_protocol=(tables_min, tables_max),
                positive_rate=positive_rate,
                seed=corpus_seed,
            )
        )
    except CorpusError as exc:
        _fail(EXIT_CONFIG, f"{exc.code}: {exc}")
    corpus_path = out / "corpus.jsonl"
    tmp = corpus_path.with_suffix(".jsonl.tmp")
    serialize_corpus(protocols, tmp)
    tmp.replace(corpus_path)
    noise = _noise_model(accuracy if accuracy is not None else 0.85,
                         sens_json, spec_json, sens_text, spec_text, rho, noise_seed)
    labeler = SimulatedLabeler(noise, labeler_id=labeler_id)
    tables = [t for p in protocols for t in p.tables]
    merged = annotate_tables(labeler, tables, max_in_flight=1)
    ann_path = out / "annotations.jsonl"
    ordered = [merged[(t.table_id, view)] for t in tables
               for view in (View.JSON_VIEW, View.TEXT_VIEW)]
    atomic_write_text(
        ann_path,
        "".join(json.dumps(a.to_record(), ensure_ascii=False) + "\n" for a in ordered),
    )
    ManifestStore(out, __version__).record_stage(
        "simulate",
        inputs=[],
        outputs=[corpus_path, ann_path],
        params={"n_protocols": n_protocols, "tables": [tables_min, tables_max],
                "positive_rate": positive_rate, "corpus_seed": corpus_seed,
                "rho": rho, "noise_seed": noise_seed, "labeler_id": labeler_id},
        stats={"protocols": len(protocols), "tables": len(tables),
               "positives": sum(1 for t in tables if t.true_label)},
    )
    click.echo(f"simulated {len(protocols)} protocols / {len(tables)} tables -> {out}")


if __name__ == "__main__":
    main()
