"""lsep-exporter: hidden-state serialization into the lsep wire formats."""

__version__ = "0.1.0"

from .export import HINT_TEXT, ExportJob, export_llm, export_ssl
from .tensor_format import ExportError, write_checksum, write_tensor

__all__ = [
    "__version__",
    "HINT_TEXT",
    "ExportJob",
    "ExportError",
    "export_llm",
    "export_ssl",
    "write_checksum",
    "write_tensor",
]
