"""Bridge from the deep-learning ecosystem into the oodnorm engine's formats."""

__version__ = "0.1.0"

from .demo_net import DemoNet
from .export_dataset import DatasetPlan, export_dataset
from .export_model import ExportError, ExportPlan, export_model
from .train import train_demo

__all__ = [
    "__version__",
    "DemoNet",
    "DatasetPlan",
    "export_dataset",
    "ExportError",
    "ExportPlan",
    "export_model",
    "train_demo",
]
