"""Complex-valued layers, initialisers, AdamW, the AutoEncoder and its training loop."""
from . import functional
from .checkpoint import load_checkpoint, read_entries, save_checkpoint, write_entries
from .init import SCHEMES, LayerParam, init_param
from .layers import Activation, BatchNorm, Bottleneck, Conv2d, Linear, Module, ResBlock, Upsample
from .model import (AEConfig, AutoEncoder, DualRVNN, build_autoencoder, build_dual_rvnn, build_model,
                    count_params, predict)
from .optim import AdamW, adamw_step
from .training import TrainConfig, TrainResult, evaluate_mse, train

__all__ = [
    "functional", "load_checkpoint", "read_entries", "save_checkpoint", "write_entries",
    "SCHEMES", "LayerParam", "init_param",
    "Activation", "BatchNorm", "Bottleneck", "Conv2d", "Linear", "Module", "ResBlock", "Upsample",
    "AEConfig", "AutoEncoder", "DualRVNN", "build_autoencoder", "build_dual_rvnn", "build_model",
    "count_params", "predict", "AdamW", "adamw_step", "TrainConfig", "TrainResult", "evaluate_mse", "train",
]
