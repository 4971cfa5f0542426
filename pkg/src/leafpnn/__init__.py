"""Leaf classification from shape, color, texture and vein features with a
probabilistic neural network."""

from .pipeline import Classifier, FeatureSelection, evaluate, extract_features, run_ablation, train_classifier

__all__ = ["Classifier", "FeatureSelection", "evaluate", "extract_features", "run_ablation", "train_classifier"]
__version__ = "0.1.0"
