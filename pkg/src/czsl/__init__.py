"""Generative-replay continual zero-shot learning.

A conditional VAE trained over a task stream, replaying synthetic features
of past seen classes from the frozen previous decoder, with a
class-incremental softmax classifier and the generalized continual
zero-shot evaluation protocol (fixed and dynamic task streams).
"""

from .classifier import (ClassifierConfig, ClassifierParams, build_training_set,
                         predict, train_classifier)
from .config import ExperimentConfig, defaults_for, load_config
from .cvae import (CvaeArchitecture, CvaeParams, DecoderParams,
                   LatentDistribution, decode, encode, generate, kl_divergence,
                   reconstruction_loss, reparameterize)
from .data import DatasetBundle, LabeledSet, load_dataset, make_synthetic_bundle, save_dataset
from .errors import (ConfigError, CzslError, DataError, DimensionError,
                     EvaluationError, NumericError, SequencingError)
from .metrics import (EvaluationLedger, MetricsResult, TaskRecord,
                      evaluate_dynamic, evaluate_fixed, harmonic,
                      per_class_accuracy)
from .replay import (NetworkTracker, ReplaySet, TrainConfig, combined_task_loss,
                     synthesize_replay, train_task)
from .runner import RunResult, run_experiment, sweep_alpha
from .taskstream import (DatasetMeta, TaskData, partition_train_test,
                         split_dynamic, split_fixed)

__version__ = "0.1.0"
