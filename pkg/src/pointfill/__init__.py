"""Point cloud completion toolkit: PCA-guided decomposition, a hybrid
state-space / attention forward pass, the flexible Chamfer loss and the
usual completion metrics."""

from pointfill.config import ConfigError, ModelConfig, default_config
from pointfill.geometry import (
    ball_query,
    canonical_sort,
    directed_nn_dists,
    fps,
    group_normalize,
    knn,
)
from pointfill.io import FormatError, read_cloud, read_weights, write_cloud, write_weights
from pointfill.loss import LossBreakdown, loss_grad, total_loss
from pointfill.metrics import (
    chamfer,
    consistency,
    dcd,
    emd,
    evaluate,
    fidelity,
    fscore,
    mmd,
    uniformity,
)
from pointfill.nn.weights import WeightError, WeightStore, init_weights
from pointfill.pca import Decomposition, PcaFrame, decompose, pca_axes, pca_sort
from pointfill.pipeline import CompletionResult, complete
from pointfill.synth import crop_viewpoint, synth_shape

__version__ = "0.1.0"

__all__ = [
    "CompletionResult",
    "ConfigError",
    "Decomposition",
    "FormatError",
    "LossBreakdown",
    "ModelConfig",
    "PcaFrame",
    "WeightError",
    "WeightStore",
    "ball_query",
    "canonical_sort",
    "chamfer",
    "complete",
    "consistency",
    "crop_viewpoint",
    "dcd",
    "decompose",
    "default_config",
    "directed_nn_dists",
    "emd",
    "evaluate",
    "fidelity",
    "fps",
    "fscore",
    "group_normalize",
    "init_weights",
    "knn",
    "loss_grad",
    "mmd",
    "pca_axes",
    "pca_sort",
    "read_cloud",
    "read_weights",
    "synth_shape",
    "total_loss",
    "uniformity",
    "write_cloud",
    "write_weights",
]
