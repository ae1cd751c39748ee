"""The learners and their supporting pieces."""

from .baselines import dct_dictionary, dct_matrix, local_min_residual
from .config import InitState, StepInfo, TrainConfig, TrainReport, svd_init
from .gdla import best_g_factor, fit_single_g, gdla_init, gdla_iterate, train_gdla
from .qdla import procrustes, train_qdla
from .rdla import (best_r_factor, fit_single_r, rdla_phase1, rdla_phase2, refine_r_factor,
                   train_rdla)
from .scores import DatasetDegenerateError, ScoreTable, score_table_g, score_table_r

__all__ = [
    "DatasetDegenerateError", "InitState", "ScoreTable", "StepInfo", "TrainConfig",
    "TrainReport", "best_g_factor", "best_r_factor", "dct_dictionary", "dct_matrix",
    "fit_single_g", "fit_single_r", "gdla_init", "gdla_iterate", "local_min_residual",
    "procrustes", "rdla_phase1", "rdla_phase2", "refine_r_factor", "score_table_g",
    "score_table_r", "svd_init", "train_gdla", "train_qdla", "train_rdla",
]
