from .experiments import PRESETS, ExperimentConfig, build_report, identify, montecarlo
from .io import load_dataset, save_dataset

__all__ = ["PRESETS", "ExperimentConfig", "build_report", "identify", "montecarlo",
           "load_dataset", "save_dataset"]
