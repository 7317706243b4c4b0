"""HTTP sentence-embedding service speaking the comvi remote protocol."""

from .encoders import (DEFAULT_SENTENCE_MODEL, Encoder, HashingEncoder,
                       SentenceTransformerEncoder, build_encoder)
from .service import (API_VERSION, DEFAULT_BATCH_CAP, ServiceConfig,
                      create_app)

__version__ = "0.1.0"

__all__ = [
    "API_VERSION",
    "DEFAULT_BATCH_CAP",
    "DEFAULT_SENTENCE_MODEL",
    "Encoder",
    "HashingEncoder",
    "SentenceTransformerEncoder",
    "ServiceConfig",
    "build_encoder",
    "create_app",
    "__version__",
]
