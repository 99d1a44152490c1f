"""Canonical label sets used across routing, extraction, and indexing."""

from enum import Enum


class Kind(str, Enum):
    """Top-level modality of an indexed file."""

    DRAWING = "Drawing"
    DOCUMENT = "Document"


class DocClass(str, Enum):
    """Governance class assigned on the document route."""

    POLICY = "Policy"
    PROCEDURE = "Procedure"
    OTHER = "Other"


class RegionKind(str, Enum):
    """The four canonical metadata regions of an engineering drawing."""

    DRAWING_NUMBER = "drawing_number"
    DATA_BLOCK = "data_block"
    PARTS_LIST = "parts_list"
    REVISIONS_BLOCK = "revisions_block"


REGION_ORDER = (
    RegionKind.DRAWING_NUMBER,
    RegionKind.DATA_BLOCK,
    RegionKind.PARTS_LIST,
    RegionKind.REVISIONS_BLOCK,
)
