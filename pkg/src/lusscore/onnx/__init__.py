"""Self-contained ONNX support: wire-level parsing and a numpy executor."""

from .model import Graph, Model, Node, ValueInfo, load_model, model_bytes, save_model
from .runtime import GraphExecutor

__all__ = [
    "Graph",
    "GraphExecutor",
    "Model",
    "Node",
    "ValueInfo",
    "load_model",
    "model_bytes",
    "save_model",
]
