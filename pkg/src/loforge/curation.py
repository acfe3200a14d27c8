"""Document-level editing: set values, insert elements, link, annotate.

Thin, typed wrappers around the op engine so callers get the same
version/log/validation discipline as schema ops.
"""

from __future__ import annotations

from .model import Collection, LinkTarget, annotation_id
from .ops import (
    AnnotateOp,
    InsertOp,
    InsertPayload,
    LinkOp,
    SetValueOp,
    apply_op,
)
from .paths import ElementPath, InstancePath


def set_value(c: Collection, doc_id: str, instance_path: InstancePath, text: str) -> Collection:
    """Replace the text of one atomic instance."""
    return apply_op(c, SetValueOp(doc_id, instance_path, text))


def insert_element(c: Collection, doc_id: str, parent_instance_path: InstancePath,
                   type_path: ElementPath, payload: InsertPayload) -> Collection:
    """Add a child instance under an existing composite instance."""
    return apply_op(c, InsertOp(doc_id, parent_instance_path, type_path, payload))


def add_link(c: Collection, doc_id: str, parent_instance_path: InstancePath,
             target: LinkTarget) -> Collection:
    """Append a link instance; the parent type must have exactly one link child."""
    return apply_op(c, LinkOp(doc_id, parent_instance_path, target))


def add_annotation(c: Collection, resource_id: str, x: int, y: int, w: int, h: int,
                   comment: str, author: str = "") -> tuple[Collection, str]:
    """Attach a rectangular comment to an image resource.

    Returns the new collection and the annotation id. Re-adding an identical
    annotation is a no-op that returns the unchanged collection.
    """
    new_c = apply_op(c, AnnotateOp(resource_id, x, y, w, h, comment, author))
    return new_c, annotation_id(resource_id, x, y, w, h, comment)
