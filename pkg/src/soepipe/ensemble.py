"""Threshold voting over (labeler, view) verdict channels."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .evaluation import MetricsMode, MetricsReport, compute_metrics, confusion, macro_metrics
from .labeling import Verdict

__all__ = [
    "EnsembleError",
    "EnsembleConfig",
    "ensemble_classify",
    "sweep_thresholds",
    "export_sweep_csv",
]


class EnsembleError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class EnsembleConfig:
    """Ordered verdict channels, each a (labeler_id, view name) pair."""

    channels: tuple[tuple[str, str], ...]
    threshold: int

    def __post_init__(self):
        if not self.channels:
            raise EnsembleError("BAD_THRESHOLD", "ensemble needs at least one channel")
        if not 1 <= self.threshold <= len(self.channels):
            raise EnsembleError(
                "BAD_THRESHOLD",
                f"threshold {self.threshold} outside 1..{len(self.channels)}",
            )


def ensemble_classify(verdicts: list[Verdict], k: int) -> bool:
    """Positive iff at least k channels vote YES; UNKNOWN never counts."""
    if not 1 <= k <= len(verdicts):
        raise EnsembleError("BAD_THRESHOLD", f"threshold {k} outside 1..{len(verdicts)}")
    return sum(1 for v in verdicts if v is Verdict.YES) >= k


def sweep_thresholds(
    config: EnsembleConfig,
    verdicts: dict[str, list[Verdict]],
    truth: dict[str, bool],
    protocol_of: dict[str, str] | None = None,
    mode: MetricsMode = MetricsMode.MICRO,
) -> list[tuple[int, MetricsReport]]:
    """One metrics report per threshold k in 1..len(channels)."""
    n_channels = len(config.channels)
    for table_id in truth:
        row = verdicts.get(table_id)
        if row is None or len(row) != n_channels:
            have = 0 if row is None else len(row)
            raise EnsembleError(
                "MISSING_VERDICT",
                f"table {table_id!r} has {have} of {n_channels} channel verdicts",
            )
    if mode is MetricsMode.MACRO_PER_PROTOCOL and protocol_of is None:
        raise EnsembleError("MISSING_VERDICT", "macro sweep needs a table->protocol map")
    results: list[tuple[int, MetricsReport]] = []
    for k in range(1, n_channels + 1):
        predictions = {tid: ensemble_classify(verdicts[tid], k) for tid in truth}
        if mode is MetricsMode.MICRO:
            report = compute_metrics(confusion(predictions, truth))
        else:
            items = [(predictions[tid], truth[tid], protocol_of[tid]) for tid in sorted(truth)]
            report = macro_metrics(items)
        results.append((k, report))
    return results


def export_sweep_csv(results: list[tuple[int, MetricsReport]], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "recall", "precision", "f1", "accuracy"])
        for k, report in results:
            writer.writerow(
                [k, f"{report.recall:.6f}", f"{report.precision:.6f}",
                 f"{report.f1:.6f}", f"{report.accuracy:.6f}"]
            )
