"""Training and serving for the generation backend behind the tuple pipeline."""

from .data import TrainingPair, load_pairs
from .train import TrainJob, step1_job, step2_job, train

__version__ = "0.1.0"

__all__ = ["TrainJob", "TrainingPair", "load_pairs", "step1_job", "step2_job", "train"]
