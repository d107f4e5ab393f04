from .extract import (
    EMBED_DIM,
    ExtractorConfig,
    build_backbone,
    checkpoint_hash,
    extract,
    extract_features,
)
from .femb import femb_file_bytes, write_femb

__version__ = "0.1.0"

__all__ = [
    "EMBED_DIM",
    "ExtractorConfig",
    "build_backbone",
    "checkpoint_hash",
    "extract",
    "extract_features",
    "femb_file_bytes",
    "write_femb",
    "__version__",
]
