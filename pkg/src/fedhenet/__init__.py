"""Single-round federated image classification over frozen embeddings with
closed-form output-layer training and homomorphic protection of the shared
statistics."""

from .data import (
    PartitionPlan,
    PartitionScheme,
    PartitionSpec,
    load_femb,
    load_plan,
    partition,
    save_femb,
    save_plan,
    synth_blobs,
)
from .errors import (
    ConfigError,
    CryptoError,
    FedHENetError,
    FormatError,
    InputError,
    NumericError,
    TransportError,
)
from .rolann import (
    ActivationKind,
    AggregatedState,
    ClassUpdate,
    ClientUpdate,
    EmbeddingDataset,
    EncryptedModel,
    GlobalModel,
    HyperParams,
    aggregate,
    centralized_fit,
    compute_client_update,
    decrypt_model,
    predict,
    solve_weights,
)

__version__ = "0.1.0"

__all__ = [
    "ActivationKind",
    "AggregatedState",
    "ClassUpdate",
    "ClientUpdate",
    "ConfigError",
    "CryptoError",
    "EmbeddingDataset",
    "EncryptedModel",
    "FedHENetError",
    "FormatError",
    "GlobalModel",
    "HyperParams",
    "InputError",
    "NumericError",
    "PartitionPlan",
    "PartitionScheme",
    "PartitionSpec",
    "TransportError",
    "aggregate",
    "centralized_fit",
    "compute_client_update",
    "decrypt_model",
    "load_femb",
    "load_plan",
    "partition",
    "predict",
    "save_femb",
    "save_plan",
    "solve_weights",
    "synth_blobs",
]
