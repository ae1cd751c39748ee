"""Fast square dictionaries factored into 2x2 transforms, and their learners."""

from .fasttransform import (FactoredGeneral, FactoredOrthogonal, GFactor, RFactor, apply,
                            apply_general, apply_general_adjoint, apply_general_inverse,
                            apply_transpose, densify, deserialize, serialize)
from .learn import TrainConfig, TrainReport, train_gdla, train_qdla, train_rdla
from .sparsecode import SparseCodeMatrix, hard_threshold, omp

__all__ = [
    "FactoredGeneral", "FactoredOrthogonal", "GFactor", "RFactor", "SparseCodeMatrix",
    "TrainConfig", "TrainReport", "apply", "apply_general", "apply_general_adjoint",
    "apply_general_inverse", "apply_transpose", "densify", "deserialize", "hard_threshold",
    "omp", "serialize", "train_gdla", "train_qdla", "train_rdla",
]
