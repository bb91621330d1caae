"""Inverse design of stacked, deployable panel structures."""

from .geometry import DualGraph, GeometryError, build_sheet, extract_dual_graph
from .sequence import CodedSequence, format_sequence, parse_sequence
from .treestack import Failure, stack_pipeline

__all__ = [
    "CodedSequence", "DualGraph", "Failure", "GeometryError", "build_sheet", "extract_dual_graph",
    "format_sequence", "parse_sequence", "stack_pipeline",
]
