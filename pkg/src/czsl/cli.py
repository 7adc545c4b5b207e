"""Command-line interface.

Verbs: split, train, eval, run, sweep-alpha, synth-data.  Configuration
comes from a YAML file (--config) and/or flags; flags win.  Environment
overrides: CZSL_OUTPUT_DIR for the output directory, CZSL_THREADS for the
numpy thread count.  Exit codes: 0 success, 2 config error, 3 data error,
4 numeric error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import runner
from .config import (ExperimentConfig, defaults_for, dump_config, load_config)
from .data import load_dataset, make_synthetic_bundle, save_dataset
from .errors import CzslError
from .taskstream import save_manifest


def _apply_env():
    threads = os.environ.get("CZSL_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)


def _build_config(config_path, dataset, dataset_path, setting, seed, alpha,
                  output_dir, no_replay) -> ExperimentConfig:
    if config_path:
        cfg = load_config(config_path)
    elif dataset and setting:
        cfg = defaults_for(dataset, setting)
    else:
        cfg = ExperimentConfig()
    if dataset is not None:
        cfg.dataset = dataset
    if dataset_path is not None:
        cfg.dataset_path = dataset_path
    if setting is not None:
        cfg.setting = setting
    if seed is not None:
        cfg.seed = seed
    if alpha is not None:
        cfg.alpha = alpha
    if output_dir is not None:
        cfg.output_dir = output_dir
    env_out = os.environ.get("CZSL_OUTPUT_DIR")
    if env_out:
        cfg.output_dir = env_out
    if no_replay:
        cfg.no_replay = True
    return cfg


def _common_options(fn):
    for option in reversed([
        click.option("--config", "config_path", type=click.Path(exists=True),
                     default=None, help="YAML experiment config."),
        click.option("--dataset", default=None,
                     help="Dataset name (CUB/aPY/AWA1/AWA2/SUN or custom)."),
        click.option("--dataset-path", type=click.Path(), default=None,
                     help="Path to a dataset container file."),
        click.option("--setting", type=click.Choice(["fixed", "dynamic"]),
                     default=None),
        click.option("--seed", type=int, default=None),
        click.option("--alpha", type=float, default=None,
                     help="Task importance in [0, 1]."),
        click.option("--output-dir", type=click.Path(), default=None),
        click.option("--no-replay", is_flag=True, default=False,
                     help="Sequential baseline: disable replay."),
    ]):
        fn = option(fn)
    return fn


@click.group()
def main():
    """Continual zero-shot learning with generative replay."""
    _apply_env()


@main.command()
@_common_options
def split(**kw):
    """Build the task stream and write the split manifest."""
    cfg = _build_config(**kw)
    bundle = load_dataset(cfg.dataset_path)
    tasks = runner.build_tasks(cfg, bundle)
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_manifest(outdir / "manifest.json", cfg.setting, bundle.meta(), tasks,
                  cfg.seed)
    click.echo(f"wrote {outdir / 'manifest.json'} ({len(tasks)} tasks)")


@main.command()
@_common_options
def train(**kw):
    """Train the CVAE over all tasks; write checkpoints and loss log."""
    cfg = _build_config(**kw)
    bundle = runner._resolve_bundle(cfg, None)
    tasks = runner.build_tasks(cfg, bundle)
    outdir = Path(cfg.output_dir)
    runner._prepare_outdir(outdir)
    save_manifest(outdir / "manifest.json", cfg.setting, bundle.meta(), tasks,
                  cfg.seed)
    dump_config(cfg, outdir / "config.yaml")
    paths = runner.train_stream(cfg, bundle, tasks, outdir)
    click.echo(f"trained {len(paths)} tasks; checkpoints in {outdir / 'checkpoints'}")


@main.command("eval")
@_common_options
def eval_cmd(**kw):
    """Evaluate existing checkpoints: classifiers, metrics, report, figures."""
    cfg = _build_config(**kw)
    bundle = runner._resolve_bundle(cfg, None)
    tasks = runner.build_tasks(cfg, bundle)
    outdir = Path(cfg.output_dir)
    runner._prepare_outdir(outdir)
    ckpts = [outdir / "checkpoints" / f"task_{td.task:02d}.npz" for td in tasks]
    ledger, result = runner.evaluate_stream(cfg, bundle, tasks, ckpts, outdir)
    runner.emit_report(ledger, result, cfg, outdir)
    click.echo(f"mSA={result.msa:.4f} mUA={result.mua:.4f} mH={result.mh:.4f}")


@main.command()
@_common_options
def run(**kw):
    """End-to-end: split, train, evaluate, report."""
    cfg = _build_config(**kw)
    result = runner.run_experiment(cfg)
    m = result.metrics
    click.echo(f"mSA={m.msa:.4f} mUA={m.mua:.4f} mH={m.mh:.4f}")
    click.echo(f"report in {result.output_dir}")


@main.command("sweep-alpha")
@_common_options
@click.option("--alphas", default="0,0.1,0.3,0.5,0.7,0.9,1",
              help="Comma-separated task-importance values.")
def sweep_alpha_cmd(alphas, **kw):
    """One full run per task-importance value; summary table and figure."""
    cfg = _build_config(**kw)
    values = [float(v) for v in alphas.split(",") if v.strip() != ""]
    results = runner.sweep_alpha(cfg, values)
    for alpha in values:
        m = results[alpha]
        click.echo(f"alpha={alpha:g}: mSA={m.msa:.4f} mUA={m.mua:.4f} "
                   f"mH={m.mh:.4f}")


@main.command("synth-data")
@click.option("--out", type=click.Path(), required=True)
@click.option("--classes", type=int, default=8)
@click.option("--samples-per-class", type=int, default=50)
@click.option("--feature-dim", type=int, default=8)
@click.option("--attribute-dim", type=int, default=3)
@click.option("--seen", type=int, default=None,
              help="Number of seen classes (rest unseen); default all seen.")
@click.option("--seed", type=int, default=0)
def synth_data(out, classes, samples_per_class, feature_dim, attribute_dim,
               seen, seed):
    """Write a synthetic Gaussian-cluster dataset container for smoke runs."""
    bundle = make_synthetic_bundle(
        num_classes=classes, samples_per_class=samples_per_class,
        feature_dim=feature_dim, attribute_dim=attribute_dim, seed=seed,
        num_seen=seen,
    )
    save_dataset(out, bundle)
    click.echo(f"wrote {out}: {len(bundle.labels)} samples, "
               f"{bundle.num_classes} classes")


def entrypoint(argv=None):
    try:
        main.main(args=argv, standalone_mode=False)
        return 0
    except CzslError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        return 1


if __name__ == "__main__":
    sys.exit(entrypoint())
