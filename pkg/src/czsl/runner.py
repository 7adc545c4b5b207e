"""End-to-end run orchestration: split -> train -> classify -> evaluate -> report.

A run is a pure function of (dataset, config, seed).  The output directory
after a full run contains the split manifest, one CVAE checkpoint and one
classifier checkpoint per task, the per-epoch loss log, the prediction
ledger, the metrics record, the resolved config echo, a delimited per-task
report, and rendered figures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import classifier as clf_mod
from . import cvae, plots
from .config import ExperimentConfig, dump_config
from .data import DatasetBundle, load_dataset
from .errors import ConfigError, DataError
from .metrics import (EvaluationLedger, MetricsResult, TaskRecord,
                      evaluate_dynamic, evaluate_fixed)
from .replay import NetworkTracker, train_task
from .rng import STREAM_CLASSIFIER, derive_rng
from .taskstream import (DYNAMIC, FIXED, TaskData, save_manifest, split_dynamic,
                         split_fixed)


@dataclass
class RunResult:
    metrics: MetricsResult
    ledger: EvaluationLedger
    output_dir: Path
    tracker: NetworkTracker


def _resolve_bundle(cfg: ExperimentConfig,
                    bundle: DatasetBundle | None) -> DatasetBundle:
    if bundle is None:
        if not cfg.dataset_path:
            raise DataError("no dataset: set dataset_path or pass a bundle")
        bundle = load_dataset(cfg.dataset_path)
    if cfg.normalize_attributes:
        bundle = bundle.normalized_attributes()
    return bundle


def build_tasks(cfg: ExperimentConfig, bundle: DatasetBundle) -> list[TaskData]:
    meta = bundle.meta()
    if cfg.setting == FIXED:
        recipe = None
        if cfg.classes_per_task:
            count, rem = divmod(meta.total_classes, cfg.classes_per_task)
            if rem:
                raise ConfigError(
                    f"{meta.total_classes} classes not divisible into tasks of "
                    f"{cfg.classes_per_task}"
                )
            recipe = [cfg.classes_per_task] * count
        return split_fixed(meta, cfg.seed, recipe=recipe)
    recipe = None
    if cfg.seen_unseen_per_task:
        recipe = [tuple(pair) for pair in cfg.seen_unseen_per_task]
    return split_dynamic(meta, cfg.seed, recipe=recipe)


def _prepare_outdir(outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    probe = outdir / ".write_probe"
    try:
        probe.write_text("")
    except OSError as exc:
        raise DataError(f"output directory {outdir} is not writable: {exc}") from exc
    probe.unlink()
    (outdir / "checkpoints").mkdir(exist_ok=True)
    (outdir / "classifiers").mkdir(exist_ok=True)


def _classifier_scope(cfg: ExperimentConfig, bundle: DatasetBundle,
                      task: TaskData) -> dict[int, np.ndarray]:
    if cfg.setting == FIXED:
        classes = range(bundle.num_classes)
    else:
        classes = list(task.seen_classes) + list(task.unseen_classes)
    return {int(c): bundle.class_attribute(int(c)) for c in classes}


def _test_pool(cfg: ExperimentConfig, tasks: list[TaskData], t: int) -> np.ndarray:
    if cfg.setting == FIXED:
        # seen pool: held-out test data of tasks <= t; unseen pool: of tasks > t
        parts = [td.test_indices for td in tasks]
    else:
        parts = [td.test_indices for td in tasks if td.task <= t]
    return np.concatenate(parts) if parts else np.empty(0, dtype=int)


def train_stream(cfg: ExperimentConfig, bundle: DatasetBundle,
                 tasks: list[TaskData], outdir: Path,
                 tracker: NetworkTracker | None = None) -> list[Path]:
    """Train all tasks' CVAEs; returns the checkpoint paths in task order."""
    tracker = tracker or NetworkTracker()
    train_cfg = cfg.resolved_train()
    checkpoint_paths = []
    loss_log = outdir / "losses.jsonl"
    loss_log.write_text("")
    class_tasks = {}
    for td in tasks:
        for c in (td.new_seen_classes or td.classes):
            class_tasks[int(c)] = td.task
    arch = cvae.CvaeArchitecture(
        feature_dim=bundle.feature_dim,
        attribute_dim=bundle.attribute_dim,
        encoder_hidden=cfg.arch.encoder_hidden,
        latent_dim=cfg.arch.latent_dim,
        decoder_hidden=cfg.arch.decoder_hidden,
        dropout_rate=cfg.arch.dropout_rate,
    )
    prev_path = None
    for td in tasks:
        train_set = bundle.subset(td.train_indices)
        if td.task == 1:
            past_attrs = None
        else:
            prev_seen = [c for c in tasks[td.task - 2].seen_classes]
            past_attrs = {int(c): bundle.class_attribute(int(c))
                          for c in prev_seen}
        params, records = train_task(
            td.task, train_set, prev_path, train_cfg, arch,
            past_class_attributes=past_attrs,
            class_tasks=class_tasks,
            tracker=tracker,
        )
        with open(loss_log, "a") as fh:
            for record in records:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
        path = outdir / "checkpoints" / f"task_{td.task:02d}.npz"
        cvae.save_checkpoint(path, params,
                             meta={"task": td.task, "dataset": bundle.name,
                                   "seed": cfg.seed})
        checkpoint_paths.append(path)
        prev_path = path
    return checkpoint_paths


def evaluate_stream(cfg: ExperimentConfig, bundle: DatasetBundle,
                    tasks: list[TaskData], checkpoint_paths: list[Path],
                    outdir: Path) -> tuple[EvaluationLedger, MetricsResult]:
    """Retrain the classifier per task from each checkpoint's decoder and
    evaluate on the setting's cumulative test pool."""
    if len(checkpoint_paths) != len(tasks):
        raise DataError(
            f"{len(checkpoint_paths)} checkpoints for {len(tasks)} tasks"
        )
    samples = cfg.classifier_samples_per_class or cfg.train.samples_per_class
    ledger = EvaluationLedger()
    for td, ckpt in zip(tasks, checkpoint_paths):
        decoder, _ = cvae.load_decoder(ckpt)
        scope = _classifier_scope(cfg, bundle, td)
        rng = derive_rng(cfg.seed, STREAM_CLASSIFIER, td.task)
        train_set = clf_mod.build_training_set(decoder, scope, samples, rng)
        clf = clf_mod.train_classifier(train_set, cfg.classifier, rng)
        clf_mod.save_classifier(
            outdir / "classifiers" / f"task_{td.task:02d}.npz", clf,
            meta={"task": td.task, "dataset": bundle.name, "seed": cfg.seed},
        )
        pool = _test_pool(cfg, tasks, td.task)
        test = bundle.subset(pool)
        preds = clf_mod.predict(clf, test.features)
        ledger.add(TaskRecord(
            task=td.task,
            predictions=preds,
            labels=test.labels,
            seen_classes=frozenset(int(c) for c in td.seen_classes),
            unseen_classes=frozenset(int(c) for c in td.unseen_classes),
        ))
    evaluate = evaluate_fixed if cfg.setting == FIXED else evaluate_dynamic
    return ledger, evaluate(ledger)


def emit_report(ledger: EvaluationLedger, result: MetricsResult,
                cfg: ExperimentConfig, outdir: Path,
                figures: bool = True) -> None:
    """Write the ledger, metrics record, delimited per-task report, config
    echo, and figures."""
    ledger_doc = [
        {
            "task": r.task,
            "predictions": [int(v) for v in r.predictions],
            "labels": [int(v) for v in r.labels],
            "seen_classes": sorted(r.seen_classes),
            "unseen_classes": sorted(r.unseen_classes),
        }
        for r in ledger.records
    ]
    (outdir / "ledger.json").write_text(json.dumps(ledger_doc, sort_keys=True))

    metrics_doc = {
        "setting": cfg.setting,
        "alpha": cfg.alpha,
        "seed": cfg.seed,
        "mSA": result.msa,
        "mUA": result.mua,
        "mH": result.mh,
        "per_task": [
            {"task": i + 1, "seen_acc": sa, "unseen_acc": ua, "harmonic": h}
            for i, (sa, ua, h) in enumerate(zip(
                result.per_task_seen, result.per_task_unseen,
                result.per_task_harmonic))
        ],
    }
    (outdir / "metrics.json").write_text(
        json.dumps(metrics_doc, sort_keys=True, indent=1)
    )

    lines = ["task,seen_acc,unseen_acc,harmonic"]
    for row in metrics_doc["per_task"]:
        ua = "" if row["unseen_acc"] is None else f"{row['unseen_acc']:.6f}"
        h = "" if row["harmonic"] is None else f"{row['harmonic']:.6f}"
        lines.append(f"{row['task']},{row['seen_acc']:.6f},{ua},{h}")
    lines.append(f"mean,{result.msa:.6f},{result.mua:.6f},{result.mh:.6f}")
    (outdir / "report.csv").write_text("\n".join(lines) + "\n")

    dump_config(cfg, outdir / "config.yaml")

    if figures:
        plots.plot_task_curves(result, outdir)


def run_experiment(cfg: ExperimentConfig,
                   bundle: DatasetBundle | None = None,
                   figures: bool = True) -> RunResult:
    """Full pipeline; deterministic given (dataset files, config, seed)."""
    outdir = Path(cfg.output_dir)
    _prepare_outdir(outdir)
    bundle = _resolve_bundle(cfg, bundle)
    tasks = build_tasks(cfg, bundle)
    save_manifest(outdir / "manifest.json", cfg.setting, bundle.meta(), tasks,
                  cfg.seed)
    tracker = NetworkTracker()
    checkpoints = train_stream(cfg, bundle, tasks, outdir, tracker=tracker)
    ledger, result = evaluate_stream(cfg, bundle, tasks, checkpoints, outdir)
    emit_report(ledger, result, cfg, outdir, figures=figures)
    return RunResult(metrics=result, ledger=ledger, output_dir=outdir,
                     tracker=tracker)


def sweep_alpha(cfg: ExperimentConfig, alphas: list[float],
                bundle: DatasetBundle | None = None,
                figures: bool = True) -> dict[float, MetricsResult]:
    """One full run per task-importance value, plus a sweep summary."""
    base_out = Path(cfg.output_dir)
    _prepare_outdir(base_out)
    bundle = _resolve_bundle(cfg, bundle)
    results = {}
    for alpha in alphas:
        sub = ExperimentConfig(**{
            **{f: getattr(cfg, f) for f in cfg.__dataclass_fields__
               if f not in ("alpha", "output_dir", "train", "classifier", "arch")},
            "alpha": alpha,
            "output_dir": str(base_out / f"alpha_{alpha:g}"),
            "train": cfg.train,
            "classifier": cfg.classifier,
            "arch": cfg.arch,
        })
        results[alpha] = run_experiment(sub, bundle=bundle, figures=figures).metrics
    lines = ["alpha,mSA,mUA,mH"]
    for alpha in alphas:
        r = results[alpha]
        lines.append(f"{alpha:g},{r.msa:.6f},{r.mua:.6f},{r.mh:.6f}")
    (base_out / "alpha_sweep.csv").write_text("\n".join(lines) + "\n")
    if figures:
        plots.plot_alpha_sweep(results, base_out)
    return results
