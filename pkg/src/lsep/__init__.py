"""lsep: landmark detection, information separation, and interpretable classification."""

__version__ = "0.1.0"

from .tensorio import Tensor, read_tensor, write_tensor
from .manifest import SessionManifest, SessionSet, Utterance, load_manifest

__all__ = [
    "__version__",
    "Tensor",
    "read_tensor",
    "write_tensor",
    "SessionManifest",
    "SessionSet",
    "Utterance",
    "load_manifest",
]
