"""Measurement machinery: confusion metrics (micro and per-protocol macro),
percentile bootstrap confidence intervals, per-protocol threshold buckets,
agreement matrices, and inter-rater agreement.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "EvalError",
    "MetricsMode",
    "ConfusionCounts",
    "MetricsReport",
    "ProtocolThresholdReport",
    "AgreementMatrix",
    "EvalItem",
    "confusion",
    "counts_from_items",
    "compute_metrics",
    "macro_metrics",
    "bootstrap_ci",
    "attach_bootstrap_cis",
    "protocol_threshold_report",
    "agreement_matrix",
    "inter_rater_agreement",
    "threshold_report_to_csv",
    "metrics_to_json",
]

METRIC_NAMES = ("recall", "precision", "f1", "accuracy")

# (prediction, truth, protocol_id)
EvalItem = tuple[bool, bool, str]


class EvalError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class MetricsMode(enum.Enum):
    MICRO = "MICRO"
    MACRO_PER_PROTOCOL = "MACRO_PER_PROTOCOL"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass
class MetricsReport:
    recall: float
    precision: float
    f1: float
    accuracy: float
    mode: MetricsMode
    cis: dict[str, tuple[float, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out: dict = {m: getattr(self, m) for m in METRIC_NAMES}
        out["mode"] = self.mode.value
        if self.cis:
            out["cis"] = {m: list(ci) for m, ci in self.cis.items()}
        return out


@dataclass(frozen=True)
class ProtocolThresholdReport:
    pct_protocols_precision_gt_60: float
    pct_precision_gt_80: float
    pct_precision_100: float
    pct_recall_100: float


@dataclass(frozen=True)
class AgreementMatrix:
    both_pos: int
    a_pos_b_neg: int
    a_neg_b_pos: int
    both_neg: int

    @property
    def total(self) -> int:
        return self.both_pos + self.a_pos_b_neg + self.a_neg_b_pos + self.both_neg

    @property
    def overall_agreement(self) -> float:
        return (self.both_pos + self.both_neg) / self.total


def confusion(predictions: dict[str, bool], truth: dict[str, bool]) -> ConfusionCounts:
    if set(predictions) != set(truth):
        raise EvalError("KEY_MISMATCH", "prediction and truth key sets differ")
    tp = fp = fn = tn = 0
    for key, pred in predictions.items():
        actual = truth[key]
        if pred and actual:
            tp += 1
        elif pred and not actual:
            fp += 1
        elif not pred and actual:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def counts_from_items(items: list[EvalItem]) -> ConfusionCounts:
    tp = sum(1 for p, t, _ in items if p and t)
    fp = sum(1 for p, t, _ in items if p and not t)
    fn = sum(1 for p, t, _ in items if not p and t)
    tn = sum(1 for p, t, _ in items if not p and not t)
    return ConfusionCounts(tp, fp, fn, tn)


def _metric_values(counts: ConfusionCounts) -> dict[str, float]:
    # Zero-denominator convention: nothing predicted (or nothing actual) means
    # no precision (recall) errors were made, so the metric is 1.
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 1.0
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    accuracy = (counts.tp + counts.tn) / counts.total
    return {"recall": recall, "precision": precision, "f1": f1, "accuracy": accuracy}


def compute_metrics(counts: ConfusionCounts) -> MetricsReport:
    if counts.total < 1:
        raise EvalError("EMPTY_SET", "cannot compute metrics on zero items")
    return MetricsReport(mode=MetricsMode.MICRO, **_metric_values(counts))


def _group_by_protocol(items: list[EvalItem]) -> dict[str, ConfusionCounts]:
    grouped: dict[str, list[EvalItem]] = {}
    for item in items:
        grouped.setdefault(item[2], []).append(item)
    return {pid: counts_from_items(rows) for pid, rows in sorted(grouped.items())}


def macro_metrics(items: list[EvalItem]) -> MetricsReport:
    """Per-protocol metrics averaged arithmetically across protocols.

    The macro F1 is the mean of per-protocol F1 values, not the harmonic
    mean of the averaged precision and recall.
    """
    if not items:
        raise EvalError("EMPTY_SET", "no items")
    per_protocol = [_metric_values(c) for c in _group_by_protocol(items).values()]
    means = {m: float(np.mean([pv[m] for pv in per_protocol])) for m in METRIC_NAMES}
    return MetricsReport(mode=MetricsMode.MACRO_PER_PROTOCOL, **means)


def _percentile(sorted_values: np.ndarray, q: float) -> float:
    """Linear-interpolation percentile over a pre-sorted array."""
    pos = q * (len(sorted_values) - 1)
    lo = int(np.floor(pos))
    hi = int(np.ceil(pos))
    frac = pos - lo
    return float(sorted_values[lo] + (sorted_values[hi] - sorted_values[lo]) * frac)


def _replication_rng(seed: int, replication: int) -> np.random.Generator:
    # Streams derived from (seed, index) so serial and parallel runs agree.
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, replication))))


def bootstrap_ci(
    items: list[EvalItem],
    metric: str,
    mode: MetricsMode = MetricsMode.MICRO,
    replications: int = 10_000,
    level: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap interval for one metric.

    MICRO resamples tables with replacement; MACRO_PER_PROTOCOL resamples
    whole protocols. Deterministic given seed.
    """
    if not items:
        raise EvalError("EMPTY_SET", "no items")
    if metric not in METRIC_NAMES:
        raise EvalError("BAD_METRIC", f"unknown metric {metric!r}")
    if not 0.0 < level < 1.0:
        raise EvalError("BAD_LEVEL", f"level must be in (0,1), got {level}")
    preds = np.array([p for p, _, _ in items], dtype=np.bool_)
    truths = np.array([t for _, t, _ in items], dtype=np.bool_)
    stats = np.empty(replications, dtype=np.float64)
    if mode is MetricsMode.MICRO:
        n = len(items)
        for r in range(replications):
            idx = _replication_rng(seed, r).integers(0, n, n)
            p, t = preds[idx], truths[idx]
            counts = ConfusionCounts(
                tp=int(np.sum(p & t)),
                fp=int(np.sum(p & ~t)),
                fn=int(np.sum(~p & t)),
                tn=int(np.sum(~p & ~t)),
            )
            stats[r] = _metric_values(counts)[metric]
    else:
        per_protocol = _group_by_protocol(items)
        values = np.array([_metric_values(c)[metric] for c in per_protocol.values()])
        n = len(values)
        for r in range(replications):
            idx = _replication_rng(seed, r).integers(0, n, n)
            stats[r] = float(np.mean(values[idx]))
    stats.sort()
    alpha = (1.0 - level) / 2.0
    return _percentile(stats, alpha), _percentile(stats, 1.0 - alpha)


def attach_bootstrap_cis(
    report: MetricsReport,
    items: list[EvalItem],
    replications: int = 10_000,
    level: float = 0.95,
    seed: int = 0,
) -> MetricsReport:
    report.cis = {
        m: bootstrap_ci(items, m, report.mode, replications, level, seed) for m in METRIC_NAMES
    }
    return report


def protocol_threshold_report(items: list[EvalItem]) -> ProtocolThresholdReport:
    """Percentages of protocols clearing precision/recall thresholds."""
    if not items:
        raise EvalError("EMPTY_SET", "no items")
    per_protocol = [_metric_values(c) for c in _group_by_protocol(items).values()]
    n = len(per_protocol)

    def pct(flags: list[bool]) -> float:
        return 100.0 * sum(flags) / n

    return ProtocolThresholdReport(
        pct_protocols_precision_gt_60=pct([pv["precision"] > 0.60 for pv in per_protocol]),
        pct_precision_gt_80=pct([pv["precision"] > 0.80 for pv in per_protocol]),
        pct_precision_100=pct([pv["precision"] == 1.0 for pv in per_protocol]),
        pct_recall_100=pct([pv["recall"] == 1.0 for pv in per_protocol]),
    )


def agreement_matrix(ann_a: dict[str, bool], ann_b: dict[str, bool]) -> AgreementMatrix:
    if set(ann_a) != set(ann_b):
        raise EvalError("KEY_MISMATCH", "annotator key sets differ")
    if not ann_a:
        raise EvalError("EMPTY_SET", "no items")
    cells = [0, 0, 0, 0]
    for key, a in ann_a.items():
        b = ann_b[key]
        cells[(0 if a else 2) + (0 if b else 1)] += 1
    return AgreementMatrix(*cells)


def inter_rater_agreement(
    assignments: list[tuple[str, str, bool]], overlap_sets: list[set[str]]
) -> float:
    """Mean pairwise raw agreement over rater pairs within each overlap set."""
    by_rater: dict[str, dict[str, bool]] = {}
    for item_id, rater_id, label in assignments:
        by_rater.setdefault(rater_id, {})[item_id] = label
    pair_agreements: list[float] = []
    for raters in overlap_sets:
        names = sorted(raters)
        if len(names) < 2:
            raise EvalError("INSUFFICIENT_OVERLAP", f"overlap set {names} has fewer than 2 raters")
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                a = by_rater.get(names[i], {})
                b = by_rater.get(names[j], {})
                shared = sorted(set(a) & set(b))
                if not shared:
                    raise EvalError(
                        "INSUFFICIENT_OVERLAP",
                        f"raters {names[i]!r} and {names[j]!r} share no items",
                    )
                pair_agreements.append(
                    sum(1 for k in shared if a[k] == b[k]) / len(shared)
                )
    if not pair_agreements:
        raise EvalError("INSUFFICIENT_OVERLAP", "no rater pairs")
    return float(np.mean(pair_agreements))


def threshold_report_to_csv(report: ProtocolThresholdReport, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["pct_precision_gt_60", "pct_precision_gt_80", "pct_precision_100", "pct_recall_100"]
        )
        writer.writerow(
            [
                f"{report.pct_protocols_precision_gt_60:.1f}",
                f"{report.pct_precision_gt_80:.1f}",
                f"{report.pct_precision_100:.1f}",
                f"{report.pct_recall_100:.1f}",
            ]
        )


def metrics_to_json(report: MetricsReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
