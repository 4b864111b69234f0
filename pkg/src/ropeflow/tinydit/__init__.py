from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import ModelConfig
from .model import Model, patchify, time_features, unpatchify
from .params import Params, init_params, layer_type_of, param_count, param_layout, param_offsets
from .train import TrainHyper, train

__all__ = [
    "Checkpoint",
    "Model",
    "ModelConfig",
    "Params",
    "TrainHyper",
    "init_params",
    "layer_type_of",
    "load_checkpoint",
    "param_count",
    "param_layout",
    "param_offsets",
    "patchify",
    "save_checkpoint",
    "time_features",
    "train",
    "unpatchify",
]
