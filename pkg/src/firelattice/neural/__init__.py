"""Numpy neural networks for one-step fire-front prediction."""
from .checkpoint import load_model, save_model
from .models import (ModelPredictor, build_cnn_simplified, build_cnn_thresholded, build_convlstm,
                     build_model)
from .optim import Adam
from .train import TrainingDiverged, train

__all__ = ["Adam", "ModelPredictor", "TrainingDiverged", "build_cnn_simplified", "build_cnn_thresholded",
           "build_convlstm", "build_model", "load_model", "save_model", "train"]
