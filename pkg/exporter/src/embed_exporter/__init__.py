from .exporter import DEFAULT_MODEL, ExportError, ExportJob, VerifyReport, export_embeddings, verify_export

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MODEL",
    "ExportError",
    "ExportJob",
    "VerifyReport",
    "export_embeddings",
    "verify_export",
    "__version__",
]
