"""Self-adjusting fusion representation learning for text-audio sentiment.

A numpy implementation (numba-accelerated recurrence kernels) of a sentiment
regressor over unaligned text and audio feature sequences: convolutional
alignment, bidirectional GRU encoding, collaboration attention, two-stage
crossmodal adjustment transformers, and joint local/global L1 training,
plus a synthetic-data pipeline and a finite-difference gradient harness.
"""

from .config import RunConfig, load_config
from .data import (
    Batch,
    DatasetSplit,
    SyntheticSpec,
    UtteranceRecord,
    generate_synthetic,
    load_jsonl,
    make_batches,
    save_jsonl,
)
from .gradcheck import gradcheck
from .heads import Predictions, joint_loss
from .metrics import MetricsReport, compute_metrics
from .model import SentimentModel
from .protocol import multi_seed, sweep_blocks
from .train import evaluate, train
from .xadjust import positional_encoding

__version__ = "0.1.0"

__all__ = [
    "Batch",
    "DatasetSplit",
    "MetricsReport",
    "Predictions",
    "RunConfig",
    "SentimentModel",
    "SyntheticSpec",
    "UtteranceRecord",
    "compute_metrics",
    "evaluate",
    "generate_synthetic",
    "gradcheck",
    "joint_loss",
    "load_config",
    "load_jsonl",
    "make_batches",
    "multi_seed",
    "positional_encoding",
    "save_jsonl",
    "sweep_blocks",
    "train",
]
