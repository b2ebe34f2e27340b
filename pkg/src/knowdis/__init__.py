"""Distant data augmentation for event causality detection.

Gold causal event pairs are expanded through lexical knowledge, ranked
by a translation-embedding scorer, matched against a sampled corpus to
produce distant labels, refined with causal-strength statistics and
connective evidence, and finally used to train a detector through
relabeling and an annealed schedule.
"""

from ._kernels import BACKEND as kernel_backend
from .annotator import LabeledSentence, SentenceRecord
from .commonsense import CooccurrenceTable, CSParams
from .detector import DetectorModel, TrainConfig
from .errors import (ConfigError, DependencyError, FixtureParseError,
                     KnowdisError, MissingEmbeddingError, TrainingError)
from .lexicon import EventPair, SynsetIndex, VerbClassIndex
from .pair_embedding import EmbeddingSpace, MarginConfig
from .pipeline import EvalReport, PipelineConfig, load_config, run_stage

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CooccurrenceTable",
    "CSParams",
    "DependencyError",
    "DetectorModel",
    "EmbeddingSpace",
    "EvalReport",
    "EventPair",
    "FixtureParseError",
    "KnowdisError",
    "LabeledSentence",
    "MarginConfig",
    "MissingEmbeddingError",
    "PipelineConfig",
    "SentenceRecord",
    "SynsetIndex",
    "TrainConfig",
    "TrainingError",
    "VerbClassIndex",
    "kernel_backend",
    "load_config",
    "run_stage",
]
