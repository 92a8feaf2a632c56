"""Fast linear text classification with hashed n-grams and hierarchical softmax."""

from quicktext._backend import BACKEND
from quicktext.config import TrainConfig
from quicktext.dictionary import Dictionary, FeatureVector, tokenize
from quicktext.huffman import HuffmanTree, build_tree
from quicktext.metrics import EvalReport, evaluate, precision_recall_at_k
from quicktext.model import Model
from quicktext.persistence import load, save
from quicktext.predictor import Prediction, count_visited_nodes, predict, predict_full, predict_hs
from quicktext.trainer import train

__all__ = [
    "BACKEND",
    "Dictionary",
    "EvalReport",
    "FeatureVector",
    "HuffmanTree",
    "Model",
    "Prediction",
    "TrainConfig",
    "build_tree",
    "count_visited_nodes",
    "evaluate",
    "load",
    "precision_recall_at_k",
    "predict",
    "predict_full",
    "predict_hs",
    "save",
    "tokenize",
    "train",
]

__version__ = "0.1.0"
