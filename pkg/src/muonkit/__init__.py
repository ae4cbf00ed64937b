"""muonkit: AdamW, Muon, and MuonAll optimizers over a minimal dense
float64 core, with a deterministic training harness and exact
orthogonalization oracles for verification.
"""

from ._version import VERSION as __version__
from .tensor import (NonFiniteError, axpy_scale, diag_embed, diag_extract,
                     frobenius_norm, matmul, matrix, transpose, vector)
from .newton_schulz import NsConfig, ns_diagonal, ns_orthogonalize, phi_scalar
from .optim import (LR_FINAL, AdamHyper, AdamState, AdamW, Muon, MuonAll,
                    MuonHyper, MuonState, ParamGroups, ParamTensor, adamw_step,
                    lr_schedule, muon_matrix_step, muonall_step, partition_params)
from .models import (Batch, MlpModel, SplitMix64, TaskSpec, forward, init_model,
                     loss_and_grads, make_task)
from .harness import (DESK_LR_PRESETS, LLM_SFT_LR_PRESETS, CompareError, RunLog,
                      StepRecord, TrainConfig, TrainingDiverged, compare,
                      run_experiment)

__all__ = [
    "__version__",
    # tensor core
    "NonFiniteError", "matrix", "vector", "matmul", "transpose",
    "frobenius_norm", "axpy_scale", "diag_embed", "diag_extract",
    # newton-schulz
    "NsConfig", "phi_scalar", "ns_orthogonalize", "ns_diagonal",
    # optimizers
    "ParamTensor", "ParamGroups", "partition_params", "AdamHyper", "MuonHyper",
    "AdamState", "MuonState", "adamw_step", "muon_matrix_step", "muonall_step",
    "lr_schedule", "LR_FINAL", "AdamW", "Muon", "MuonAll",
    # models and tasks
    "SplitMix64", "MlpModel", "Batch", "TaskSpec", "init_model", "forward",
    "loss_and_grads", "make_task",
    # harness
    "TrainConfig", "RunLog", "StepRecord", "run_experiment", "compare",
    "TrainingDiverged", "CompareError", "DESK_LR_PRESETS", "LLM_SFT_LR_PRESETS",
]
