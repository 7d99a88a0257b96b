"""Canonical, content-addressed normalization of IFC exchange files.

Normalized files list each distinct subgraph once, under a row ID derived
from its content, so line-based tools such as Git only see real changes
between exported model versions.
"""

from .diffkit import HashSetManifest, diff_hash_sets, export_hash_set
from .graph import CycleError, DanglingReferenceError, GraphError, ModelGraph, build_graph
from .hashing import HashingError, HashOptions, NodeDigest, djb, hash_string
from .ids import CapacityError, IdConfig, overflow_probability
from .pipeline import NormalizeOptions, NormalizeResult, normalize, normalize_file
from .step import EntityInstance, RawFile, StepError, WriterOptions, canonical_row, parse, write_file

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "CycleError",
    "DanglingReferenceError",
    "EntityInstance",
    "GraphError",
    "HashOptions",
    "HashSetManifest",
    "HashingError",
    "IdConfig",
    "ModelGraph",
    "NodeDigest",
    "NormalizeOptions",
    "NormalizeResult",
    "RawFile",
    "StepError",
    "WriterOptions",
    "build_graph",
    "canonical_row",
    "diff_hash_sets",
    "djb",
    "export_hash_set",
    "hash_string",
    "normalize",
    "normalize_file",
    "overflow_probability",
    "parse",
    "write_file",
]
