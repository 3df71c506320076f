"""Prototype-enhanced soft-label training on a small MLP encoder."""

from ._pel import (
    Dataset,
    DivergenceError,
    MlpModel,
    NoiseMode,
    PrototypeBank,
    Sample,
    SimilarityMode,
    Strategy,
    SyntheticSpec,
    TrainConfig,
    TrainResult,
    evaluate,
    fuse_labels,
    generate,
    gradcheck,
    kl_loss,
    l2_normalize,
    load_csv,
    parse_config,
    run_beta_sweep,
    save_csv,
    similarity_profile,
    tempered_softmax,
    train,
)

__all__ = [
    "Dataset",
    "DivergenceError",
    "MlpModel",
    "NoiseMode",
    "PrototypeBank",
    "Sample",
    "SimilarityMode",
    "Strategy",
    "SyntheticSpec",
    "TrainConfig",
    "TrainResult",
    "evaluate",
    "fuse_labels",
    "generate",
    "gradcheck",
    "kl_loss",
    "l2_normalize",
    "load_csv",
    "parse_config",
    "run_beta_sweep",
    "save_csv",
    "similarity_profile",
    "tempered_softmax",
    "train",
]
