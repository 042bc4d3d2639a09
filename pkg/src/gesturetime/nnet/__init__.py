from .core import backward, class_weights, forward, init_params, loss
from .model import (CHECKPOINT_VERSION, Hyper, ModelCheckpoint, TrainResult,
                    grad_check, load_checkpoint, predict, predict_checkpoint,
                    save_checkpoint, train)
from .optim import AdamState, adam_step

__all__ = [
    "AdamState", "CHECKPOINT_VERSION", "Hyper", "ModelCheckpoint",
    "TrainResult", "adam_step", "backward", "class_weights", "forward",
    "grad_check", "init_params", "load_checkpoint", "loss", "predict",
    "predict_checkpoint", "save_checkpoint", "train",
]
