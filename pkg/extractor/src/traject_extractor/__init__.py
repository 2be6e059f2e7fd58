"""Transformer activation dumper producing RACT files for trajectory analysis."""

from .extract import ExtractionJob, extract
from .ract import write_manifest, write_ract

__version__ = "0.1.0"

__all__ = ["ExtractionJob", "extract", "write_manifest", "write_ract"]
