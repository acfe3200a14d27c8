"""Raw import records, schema inference, and record -> document building.

Importer plugins normalize whatever they read into RawRecord trees:
plain dicts/lists/strings plus typed leaves for resources, links, and
quizzes. infer_schema unions the shapes of all records into one schema,
keeping the loosest multiplicity that the data exhibits; build_documents
then materializes instances against that schema.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from ..model import (
    Collection,
    Document,
    ElementInstance,
    ElementType,
    KIND_ATOMIC,
    KIND_COMPOSITE,
    KIND_LINK,
    KIND_QUIZ,
    KIND_RESOURCE,
    LinkTarget,
    Mcq,
    ModelError,
    MULT_MANY,
    MULT_ONE,
    MULT_OPTIONAL,
    Origin,
    Resource,
    Schema,
    content_id,
    media_type_for,
)
from ..paths import check_name


class ImportError_(ModelError):
    """Import-level failure (name kept distinct from the builtin)."""


@dataclass(frozen=True)
class RawResource:
    """A resource to ingest: local bytes or an external URL."""

    data: bytes | None = None
    url: str | None = None
    media_type: str | None = None
    name_hint: str = ""


@dataclass(frozen=True)
class RawResourceRef:
    """Reference to a resource already present in the collection."""

    resource_id: str


@dataclass(frozen=True)
class RawLink:
    kind: str
    value: str


@dataclass(frozen=True)
class RawQuiz:
    quiz: Mcq


RawValue = Any  # str | dict[str, RawValue] | list[RawValue] | typed leaves above


@dataclass(frozen=True)
class RawRecord:
    source_id: str
    tree: dict[str, RawValue]
    locator: str = ""


def scalar_text(value: Any) -> str:
    """Canonical text for a JSON scalar (numbers/bools in JSON spelling)."""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        import json

        return json.dumps(value)
    raise ImportError_(f"cannot coerce {type(value).__name__} to text")


# ---------------------------------------------------------------------------
# Schema inference

class _Draft:
    __slots__ = ("name", "kind", "children", "occurrences", "appearances", "max_count")

    def __init__(self, name: str):
        self.name = name
        self.kind: str | None = None
        self.children: dict[str, _Draft] = {}
        self.occurrences = 0   # times this node occurred
        self.appearances = 0   # parent occurrences that had >= 1 of this child
        self.max_count = 0     # max per-parent-occurrence count

    def set_kind(self, kind: str, path: str) -> None:
        if self.kind is None:
            self.kind = kind
        elif self.kind != kind:
            raise ImportError_(f"kind conflict at {path}: {self.kind} vs {kind}")


def _value_kind(value: RawValue, path: str) -> str:
    if isinstance(value, str):
        return KIND_ATOMIC
    if isinstance(value, dict):
        return KIND_COMPOSITE
    if isinstance(value, (RawResource, RawResourceRef)):
        return KIND_RESOURCE
    if isinstance(value, RawLink):
        return KIND_LINK
    if isinstance(value, RawQuiz):
        return KIND_QUIZ
    if isinstance(value, list):
        raise ImportError_(f"nested list at {path}")
    raise ImportError_(f"unsupported value {type(value).__name__} at {path}")


def _merge_occurrence(draft: _Draft, tree: dict[str, RawValue], path: str) -> None:
    """Fold one occurrence of a composite value into the draft."""
    draft.occurrences += 1
    draft.set_kind(KIND_COMPOSITE, path or "/")
    for key, value in tree.items():
        try:
            check_name(key)
        except Exception as e:
            raise ImportError_(f"bad element name at {path}/{key!r}: {e}") from e
        items = value if isinstance(value, list) else [value]
        if not items:
            continue  # an empty list carries no shape information
        child = draft.children.get(key)
        if child is None:
            child = draft.children[key] = _Draft(key)
        child.appearances += 1
        child.max_count = max(child.max_count, len(items))
        child_path = f"{path}/{key}"
        for item in items:
            kind = _value_kind(item, child_path)
            if kind == KIND_COMPOSITE:
                _merge_occurrence(child, item, child_path)
            else:
                child.set_kind(kind, child_path)
                child.occurrences += 1


def _finalize(draft: _Draft, parent_occurrences: int, is_root: bool) -> ElementType:
    if draft.kind is None:
        raise ImportError_(f"no kind observed for {draft.name!r}")
    if draft.max_count > 1:
        mult = MULT_MANY
    elif draft.appearances < parent_occurrences:
        mult = MULT_OPTIONAL
    else:
        mult = MULT_ONE
    if is_root:
        mult = MULT_ONE
    children = tuple(_finalize(ch, draft.occurrences, False)
                     for ch in draft.children.values())
    return ElementType(draft.name, draft.kind, mult, children)


def infer_schema(records: Iterable[RawRecord], root_name: str = "collection") -> Schema:
    """Union the shapes of all records into one schema.

    Element kinds must agree across records; multiplicity is the loosest
    observed (absent anywhere -> optional, repeated anywhere -> many).
    Children keep first-appearance order.
    """
    root = _Draft(root_name)
    count = 0
    for rec in records:
        count += 1
        _merge_occurrence(root, rec.tree, "")
    if count == 0:
        raise ImportError_("no records to infer a schema from")
    return Schema(root=_finalize(root, count, True), version=0)


# ---------------------------------------------------------------------------
# Resource collection

class ResourceSink:
    """Accumulates content-addressed resources, deduplicating by id."""

    def __init__(self, resources: dict[str, Resource] | None = None,
                 blobs: dict[str, bytes] | None = None):
        self.resources: dict[str, Resource] = dict(resources or {})
        self.blobs: dict[str, bytes] = dict(blobs or {})
        self.added = 0

    def add(self, raw: RawResource | RawResourceRef) -> str:
        if isinstance(raw, RawResourceRef):
            if raw.resource_id not in self.resources:
                raise ImportError_(f"unknown resource {raw.resource_id!r}")
            return raw.resource_id
        if raw.data is not None:
            media = raw.media_type or media_type_for(raw.name_hint)
            res = Resource.local(raw.data, media)
            if res.id not in self.resources:
                self.resources[res.id] = res
                self.blobs[res.id] = raw.data
                self.added += 1
            return res.id
        if raw.url:
            res = Resource.external(raw.url, raw.media_type)
            if res.id not in self.resources:
                self.resources[res.id] = res
                self.added += 1
            return res.id
        raise ImportError_("resource with neither bytes nor URL")


# ---------------------------------------------------------------------------
# Record -> document

def _build_instance(name: str, value: RawValue, sink: ResourceSink) -> ElementInstance:
    if isinstance(value, str):
        return ElementInstance.atomic(name, value)
    if isinstance(value, dict):
        children = []
        for key, v in value.items():
            items = v if isinstance(v, list) else [v]
            children.extend(_build_instance(key, item, sink) for item in items)
        return ElementInstance.composite(name, tuple(children))
    if isinstance(value, (RawResource, RawResourceRef)):
        return ElementInstance.resource(name, sink.add(value))
    if isinstance(value, RawLink):
        return ElementInstance.of_link(name, LinkTarget(value.kind, value.value))
    if isinstance(value, RawQuiz):
        return ElementInstance.of_quiz(name, value.quiz)
    raise ImportError_(f"unsupported value {type(value).__name__} under {name!r}")


def build_document(rec: RawRecord, root_name: str, plugin: str,
                   sink: ResourceSink) -> Document:
    root = _build_instance(root_name, rec.tree, sink)
    return Document(id=rec.source_id, root=root,
                    origin=Origin(plugin=plugin, locator=rec.locator))


# ---------------------------------------------------------------------------
# Document -> record (for re-inference over existing content)

def _instance_to_raw(inst: ElementInstance) -> RawValue:
    if inst.text is not None:
        return inst.text
    if inst.resource_id is not None:
        return RawResourceRef(inst.resource_id)
    if inst.link is not None:
        return RawLink(inst.link.kind, inst.link.value)
    if inst.quiz is not None:
        return RawQuiz(inst.quiz)
    tree: dict[str, RawValue] = {}
    for child in inst.children or ():
        value = _instance_to_raw(child)
        if child.name in tree:
            existing = tree[child.name]
            if isinstance(existing, list):
                existing.append(value)
            else:
                tree[child.name] = [existing, value]
        else:
            tree[child.name] = value
    return tree


def document_to_record(doc: Document) -> RawRecord:
    tree = _instance_to_raw(doc.root)
    assert isinstance(tree, dict)
    return RawRecord(source_id=doc.id, tree=tree, locator=doc.origin.locator)
