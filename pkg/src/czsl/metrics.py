"""Generalized continual zero-shot evaluation.

Accuracy is always per-class (mean of per-class recalls) and computed in
the joint label space: the classifier chose among seen and unseen classes
together, and this module only partitions the resulting predictions.

Fixed setting aggregates: seen accuracy is averaged over tasks 1..T,
unseen accuracy and the harmonic mean over 1..T-1 (at the last task the
unseen pool is empty).  Dynamic setting aggregates all three over 1..T.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError


@dataclass
class TaskRecord:
    """Predictions over one task's cumulative test pool, with class sets."""

    task: int
    predictions: np.ndarray
    labels: np.ndarray
    seen_classes: frozenset
    unseen_classes: frozenset

    def __post_init__(self):
        self.predictions = np.asarray(self.predictions)
        self.labels = np.asarray(self.labels)
        if self.predictions.shape != self.labels.shape:
            raise EvaluationError(
                f"task {self.task}: {len(self.predictions)} predictions vs "
                f"{len(self.labels)} labels"
            )
        self.seen_classes = frozenset(int(c) for c in self.seen_classes)
        self.unseen_classes = frozenset(int(c) for c in self.unseen_classes)


@dataclass
class EvaluationLedger:
    records: list[TaskRecord] = field(default_factory=list)

    def add(self, record: TaskRecord) -> None:
        self.records.append(record)

    @property
    def total_tasks(self) -> int:
        return len(self.records)


@dataclass
class MetricsResult:
    msa: float
    mua: float
    mh: float
    per_task_seen: list[float]
    per_task_unseen: list[float | None]
    per_task_harmonic: list[float | None]


def per_class_accuracy(predictions, labels, class_set) -> float:
    """Mean over classes of the within-class accuracy.

    Only samples whose true label is in ``class_set`` participate; every
    class in the set must have at least one sample.
    """
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    classes = sorted(int(c) for c in class_set)
    if not classes:
        raise EvaluationError("empty class set")
    accs = []
    for c in classes:
        in_class = labels == c
        total = int(in_class.sum())
        if total == 0:
            raise EvaluationError(f"class {c} has no test samples")
        accs.append(float((predictions[in_class] == c).sum()) / total)
    return float(np.mean(accs))


def harmonic(seen_acc: float, unseen_acc: float) -> float:
    """2su / (s + u); defined as 0 when both accuracies are 0."""
    if seen_acc + unseen_acc == 0.0:
        return 0.0
    return 2.0 * seen_acc * unseen_acc / (seen_acc + unseen_acc)


def _present(class_set, labels) -> set:
    # classes with zero test samples at this task are dropped from the
    # denominator rather than tripping the strict per-class check
    have = set(int(v) for v in np.unique(labels))
    return set(class_set) & have


def _task_accuracies(record: TaskRecord):
    seen = _present(record.seen_classes, record.labels)
    unseen = _present(record.unseen_classes, record.labels)
    sa = per_class_accuracy(record.predictions, record.labels, seen) if seen else None
    ua = (per_class_accuracy(record.predictions, record.labels, unseen)
          if unseen else None)
    return sa, ua


def _sorted_records(ledger: EvaluationLedger) -> list[TaskRecord]:
    records = sorted(ledger.records, key=lambda r: r.task)
    expected = list(range(1, len(records) + 1))
    if [r.task for r in records] != expected:
        raise EvaluationError(
            f"ledger tasks {[r.task for r in records]} != expected {expected}"
        )
    return records


def evaluate_fixed(ledger: EvaluationLedger) -> MetricsResult:
    """mSA over t=1..T; mUA and mH over t=1..T-1."""
    records = _sorted_records(ledger)
    T = len(records)
    if T < 2:
        raise EvaluationError(f"fixed-setting aggregates need >= 2 tasks, got {T}")
    per_sa, per_ua, per_h = [], [], []
    for i, record in enumerate(records):
        sa, ua = _task_accuracies(record)
        if sa is None:
            raise EvaluationError(f"task {record.task}: no seen-class test samples")
        per_sa.append(sa)
        if i < T - 1:
            if ua is None:
                raise EvaluationError(
                    f"task {record.task}: no unseen-class test samples"
                )
            per_ua.append(ua)
            per_h.append(harmonic(sa, ua))
        else:
            per_ua.append(None)
            per_h.append(None)
    return MetricsResult(
        msa=float(np.mean(per_sa)),
        mua=float(np.mean([u for u in per_ua if u is not None])),
        mh=float(np.mean([h for h in per_h if h is not None])),
        per_task_seen=per_sa,
        per_task_unseen=per_ua,
        per_task_harmonic=per_h,
    )


def evaluate_dynamic(ledger: EvaluationLedger) -> MetricsResult:
    """mSA, mUA, mH all averaged over t=1..T."""
    records = _sorted_records(ledger)
    if not records:
        raise EvaluationError("empty ledger")
    per_sa, per_ua, per_h = [], [], []
    for record in records:
        sa, ua = _task_accuracies(record)
        if sa is None or ua is None:
            raise EvaluationError(
                f"task {record.task}: missing "
                f"{'seen' if sa is None else 'unseen'}-class test samples"
            )
        per_sa.append(sa)
        per_ua.append(ua)
        per_h.append(harmonic(sa, ua))
    return MetricsResult(
        msa=float(np.mean(per_sa)),
        mua=float(np.mean(per_ua)),
        mh=float(np.mean(per_h)),
        per_task_seen=per_sa,
        per_task_unseen=per_ua,
        per_task_harmonic=per_h,
    )
