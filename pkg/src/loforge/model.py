"""Collection data model: resources, documents, schema, validation.

A collection is an immutable snapshot. Every mutating operation elsewhere in
the package builds a new snapshot; nothing here mutates in place. Identifiers
are deterministic: resources are content-addressed (first 16 hex chars of a
SHA-256 digest), documents keep their source id, annotations hash their own
content. That is what makes exports and replays byte-reproducible.
"""

from __future__ import annotations

import hashlib
import io
import re
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterator
from urllib.parse import urlparse

from .paths import (
    ElementPath,
    InstancePath,
    check_name,
    format_instance_path,
    format_path,
)

KIND_ATOMIC = "atomic"
KIND_COMPOSITE = "composite"
KIND_RESOURCE = "resource-ref"
KIND_LINK = "link"
KIND_QUIZ = "quiz"
KINDS = (KIND_ATOMIC, KIND_COMPOSITE, KIND_RESOURCE, KIND_LINK, KIND_QUIZ)

MULT_ONE = "one"
MULT_OPTIONAL = "optional"
MULT_MANY = "many"
MULTIPLICITIES = (MULT_ONE, MULT_OPTIONAL, MULT_MANY)

RES_LOCAL = "local-file"
RES_EXTERNAL = "external-url"

LINK_DOCUMENT = "internal-document"
LINK_ANNOTATION = "internal-annotation"
LINK_EXTERNAL = "external-url"
LINK_KINDS = (LINK_DOCUMENT, LINK_ANNOTATION, LINK_EXTERNAL)

STORE_FORMAT = "clv"
STORE_FORMAT_VERSION = 1

_MEDIA_TYPE_RE = re.compile(r"^[\w.+-]+/[\w.+-]+$")

# Pinned so exports do not depend on the host's mime database.
MEDIA_TYPES_BY_EXT = {
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".gif": "image/gif",
    ".svg": "image/svg+xml",
    ".html": "text/html",
    ".htm": "text/html",
    ".css": "text/css",
    ".js": "text/javascript",
    ".json": "application/json",
    ".txt": "text/plain",
    ".csv": "text/csv",
    ".pdf": "application/pdf",
    ".zip": "application/zip",
}
EXT_BY_MEDIA_TYPE = {
    "image/png": ".png",
    "image/jpeg": ".jpg",
    "image/gif": ".gif",
    "image/svg+xml": ".svg",
    "text/html": ".html",
    "text/css": ".css",
    "text/javascript": ".js",
    "application/json": ".json",
    "text/plain": ".txt",
    "text/csv": ".csv",
    "application/pdf": ".pdf",
    "application/zip": ".zip",
}


def content_id(data: bytes) -> str:
    """First 16 hex chars of the SHA-256 digest; stable across runs/platforms."""
    return hashlib.sha256(data).hexdigest()[:16]


def media_type_for(name_or_url: str) -> str:
    path = urlparse(name_or_url).path if "://" in name_or_url else name_or_url
    dot = path.rfind(".")
    if dot >= 0:
        return MEDIA_TYPES_BY_EXT.get(path[dot:].lower(), "application/octet-stream")
    return "application/octet-stream"


def extension_for(media_type: str) -> str:
    return EXT_BY_MEDIA_TYPE.get(media_type, ".bin")


class ModelError(ValueError):
    """Domain rule broken while constructing or mutating model objects."""


@dataclass(frozen=True)
class Resource:
    id: str
    kind: str  # local-file | external-url
    media_type: str
    locator: str  # relative store path (local) or absolute URL (external)
    byte_size: int

    @staticmethod
    def local(data: bytes, media_type: str) -> "Resource":
        rid = content_id(data)
        return Resource(
            id=rid,
            kind=RES_LOCAL,
            media_type=media_type,
            locator=f"resources/{rid}{extension_for(media_type)}",
            byte_size=len(data),
        )

    @staticmethod
    def external(url: str, media_type: str | None = None) -> "Resource":
        return Resource(
            id=content_id(url.encode("utf-8")),
            kind=RES_EXTERNAL,
            media_type=media_type or media_type_for(url),
            locator=url,
            byte_size=0,
        )


@dataclass(frozen=True)
class ElementType:
    name: str
    kind: str = KIND_ATOMIC
    multiplicity: str = MULT_ONE
    children: tuple["ElementType", ...] = ()

    def __post_init__(self):
        check_name(self.name)
        if self.kind not in KINDS:
            raise ModelError(f"unknown element kind {self.kind!r}")
        if self.multiplicity not in MULTIPLICITIES:
            raise ModelError(f"unknown multiplicity {self.multiplicity!r}")

    def child(self, name: str) -> "ElementType | None":
        for c in self.children:
            if c.name == name:
                return c
        return None

    def walk(self, prefix: ElementPath = ()) -> Iterator[tuple[ElementPath, "ElementType"]]:
        """Yields (path, type) for this node and all descendants, preorder."""
        here = prefix + (self.name,)
        yield here, self
        for c in self.children:
            yield from c.walk(here)


@dataclass(frozen=True)
class Schema:
    root: ElementType
    version: int = 0

    def find(self, path: ElementPath) -> ElementType | None:
        """Resolve a root-relative element path; () is the root itself."""
        node = self.root
        for name in path:
            node = node.child(name)  # type: ignore[assignment]
            if node is None:
                return None
        return node

    def paths(self) -> list[ElementPath]:
        """All root-relative paths, preorder, root excluded."""
        out: list[ElementPath] = []
        for path, _node in self.root.walk():
            if len(path) > 1:
                out.append(path[1:])
        return out

    def type_count(self) -> int:
        """Number of element types, the bare root excluded."""
        return sum(1 for _ in self.root.walk()) - 1

    @staticmethod
    def bare(root_name: str = "collection") -> "Schema":
        return Schema(root=ElementType(root_name, KIND_COMPOSITE), version=0)


@dataclass(frozen=True)
class LinkTarget:
    kind: str  # internal-document | internal-annotation | external-url
    value: str


@dataclass(frozen=True)
class Mcq:
    stem: str
    choices: tuple[str, ...]
    correct_index: int
    explanation: str = ""


@dataclass(frozen=True)
class Annotation:
    id: str
    resource_id: str
    x: int
    y: int
    w: int
    h: int
    comment: str
    author: str = ""

    @staticmethod
    def make(resource_id: str, x: int, y: int, w: int, h: int, comment: str,
             author: str = "") -> "Annotation":
        aid = annotation_id(resource_id, x, y, w, h, comment)
        return Annotation(aid, resource_id, x, y, w, h, comment, author)


def annotation_id(resource_id: str, x: int, y: int, w: int, h: int, comment: str) -> str:
    return content_id(f"{resource_id}|{x},{y},{w},{h}|{comment}".encode("utf-8"))


@dataclass(frozen=True)
class ElementInstance:
    """One node of a document tree.

    Exactly one payload field is populated, matching the element kind:
    text (atomic), children (composite; may be empty), resource_id
    (resource-ref), link (link), quiz (quiz). The node stores its local type
    name; the full type path is positional.
    """

    name: str
    text: str | None = None
    children: tuple["ElementInstance", ...] | None = None
    resource_id: str | None = None
    link: LinkTarget | None = None
    quiz: Mcq | None = None

    def payload_kind(self) -> str | None:
        """Element kind implied by the populated payload; None if malformed."""
        populated = [
            kind
            for kind, value in (
                (KIND_ATOMIC, self.text),
                (KIND_COMPOSITE, self.children),
                (KIND_RESOURCE, self.resource_id),
                (KIND_LINK, self.link),
                (KIND_QUIZ, self.quiz),
            )
            if value is not None
        ]
        return populated[0] if len(populated) == 1 else None

    @staticmethod
    def atomic(name: str, text: str) -> "ElementInstance":
        return ElementInstance(name, text=text)

    @staticmethod
    def composite(name: str, children: tuple["ElementInstance", ...] = ()) -> "ElementInstance":
        return ElementInstance(name, children=children)

    @staticmethod
    def resource(name: str, resource_id: str) -> "ElementInstance":
        return ElementInstance(name, resource_id=resource_id)

    @staticmethod
    def of_link(name: str, target: LinkTarget) -> "ElementInstance":
        return ElementInstance(name, link=target)

    @staticmethod
    def of_quiz(name: str, mcq: Mcq) -> "ElementInstance":
        return ElementInstance(name, quiz=mcq)


@dataclass(frozen=True)
class Origin:
    plugin: str
    locator: str


@dataclass(frozen=True)
class Document:
    id: str
    root: ElementInstance
    origin: Origin


@dataclass(frozen=True)
class LogRecord:
    """One applied mutation: its op plus the version transition it caused."""

    pre_version: int
    post_version: int
    entry: Any  # CurationOp / document op / ImportEvent (see ops module)


@dataclass(frozen=True)
class Collection:
    schema: Schema
    documents: dict[str, Document] = field(default_factory=dict)
    resources: dict[str, Resource] = field(default_factory=dict)
    resource_bytes: dict[str, bytes] = field(default_factory=dict)
    annotations: dict[str, Annotation] = field(default_factory=dict)
    log: tuple[LogRecord, ...] = ()

    @staticmethod
    def empty(root_name: str = "collection") -> "Collection":
        return Collection(schema=Schema.bare(root_name))

    @property
    def version(self) -> int:
        return self.schema.version

    def with_version(self, version: int) -> "Collection":
        return replace(self, schema=replace(self.schema, version=version))


@dataclass(frozen=True)
class Violation:
    rule: str
    doc_id: str  # "" for collection-level violations
    path: str  # element/instance path, resource id, or annotation id
    detail: str = ""

    def __str__(self) -> str:
        where = f"doc {self.doc_id} " if self.doc_id else ""
        msg = f" ({self.detail})" if self.detail else ""
        return f"{self.rule}: {where}{self.path}{msg}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


class InvalidCollection(ModelError):
    def __init__(self, report: ValidationReport):
        super().__init__(f"collection failed validation:\n{report}")
        self.report = report


def image_dimensions(data: bytes) -> tuple[int, int] | None:
    """(width, height) of an image blob, or None if undecodable."""
    try:
        from PIL import Image

        with Image.open(io.BytesIO(data)) as img:
            return img.size
    except Exception:
        return None


def _valid_external_url(url: str) -> bool:
    parsed = urlparse(url)
    return parsed.scheme in ("http", "https") and bool(parsed.netloc)


def _check_schema(schema: Schema, add: Callable[[str, str, str], None]) -> None:
    if schema.root.kind != KIND_COMPOSITE:
        add("schema-root-not-composite", format_path(()), schema.root.kind)

    def walk(node: ElementType, path: ElementPath, is_root: bool) -> None:
        if node.kind == KIND_COMPOSITE:
            if not node.children and not is_root:
                add("schema-composite-no-children", format_path(path), "")
        elif node.children:
            add("schema-leaf-with-children", format_path(path), node.kind)
        seen: set[str] = set()
        for child in node.children:
            if child.name in seen:
                add("schema-duplicate-sibling", format_path(path + (child.name,)), "")
            seen.add(child.name)
            walk(child, path + (child.name,), False)

    walk(schema.root, (), True)


def _check_resources(c: Collection, add: Callable[[str, str, str], None]) -> None:
    for rid in sorted(c.resources):
        res = c.resources[rid]
        if res.kind == RES_LOCAL:
            data = c.resource_bytes.get(rid)
            if data is None:
                add("resource-missing-bytes", rid, res.locator)
                continue
            if res.byte_size != len(data):
                add("resource-size-mismatch", rid, f"{res.byte_size} != {len(data)}")
            if res.byte_size == 0:
                add("resource-empty", rid, "")
            if content_id(data) != rid:
                add("resource-bad-id", rid, "local id must hash the bytes")
        elif res.kind == RES_EXTERNAL:
            if not _valid_external_url(res.locator):
                add("resource-bad-url", rid, res.locator)
            if content_id(res.locator.encode("utf-8")) != rid:
                add("resource-bad-id", rid, "external id must hash the URL")
        else:
            add("resource-bad-kind", rid, res.kind)
        if not _MEDIA_TYPE_RE.match(res.media_type):
            add("resource-bad-media-type", rid, res.media_type)


def _check_annotations(c: Collection, add: Callable[[str, str, str], None]) -> None:
    dims_cache: dict[str, tuple[int, int] | None] = {}
    for aid in sorted(c.annotations):
        ann = c.annotations[aid]
        res = c.resources.get(ann.resource_id)
        if res is None:
            add("annotation-dangling-resource", aid, ann.resource_id)
            continue
        if not res.media_type.startswith("image/"):
            add("annotation-not-image", aid, res.media_type)
        if not ann.comment:
            add("annotation-empty-comment", aid, "")
        if ann.w <= 0 or ann.h <= 0 or ann.x < 0 or ann.y < 0:
            add("annotation-bad-region", aid, f"{ann.x},{ann.y},{ann.w},{ann.h}")
        elif ann.resource_id in c.resource_bytes:
            if ann.resource_id not in dims_cache:
                dims_cache[ann.resource_id] = image_dimensions(c.resource_bytes[ann.resource_id])
            dims = dims_cache[ann.resource_id]
            if dims is not None:
                width, height = dims
                if ann.x + ann.w > width or ann.y + ann.h > height:
                    add("annotation-out-of-bounds", aid,
                        f"{ann.x}+{ann.w},{ann.y}+{ann.h} exceeds {width}x{height}")
        if annotation_id(ann.resource_id, ann.x, ann.y, ann.w, ann.h, ann.comment) != aid:
            add("annotation-bad-id", aid, "id must hash resource+region+comment")


def _check_mcq(mcq: Mcq, where: str, add: Callable[[str, str, str], None]) -> None:
    if len(mcq.choices) < 2:
        add("mcq-too-few-choices", where, str(len(mcq.choices)))
    if any(not ch for ch in mcq.choices):
        add("mcq-empty-choice", where, "")
    if len(set(mcq.choices)) != len(mcq.choices):
        add("mcq-duplicate-choices", where, "")
    if not (0 <= mcq.correct_index < max(len(mcq.choices), 1)):
        add("mcq-bad-correct-index", where, str(mcq.correct_index))


def _check_document(c: Collection, doc: Document,
                    add: Callable[[str, str, str], None]) -> None:
    schema = c.schema
    if doc.root.name != schema.root.name:
        add("root-name-mismatch", format_instance_path(()),
            f"{doc.root.name!r} != {schema.root.name!r}")
        return

    def walk(inst: ElementInstance, etype: ElementType, ipath: InstancePath) -> None:
        where = format_instance_path(ipath) if ipath else "/"
        kind = inst.payload_kind()
        if kind is None:
            add("malformed-payload", where, inst.name)
            return
        if kind != etype.kind:
            add("kind-mismatch", where, f"payload {kind}, type {etype.kind}")
            return
        if kind == KIND_ATOMIC:
            return
        if kind == KIND_RESOURCE:
            if inst.resource_id not in c.resources:
                add("dangling-resource", where, inst.resource_id or "")
            return
        if kind == KIND_LINK:
            target = inst.link
            assert target is not None
            if target.kind == LINK_DOCUMENT:
                if target.value not in c.documents:
                    add("dangling-link-document", where, target.value)
            elif target.kind == LINK_ANNOTATION:
                if target.value not in c.annotations:
                    add("dangling-link-annotation", where, target.value)
            elif target.kind == LINK_EXTERNAL:
                if not _valid_external_url(target.value):
                    add("link-bad-url", where, target.value)
            else:
                add("link-bad-kind", where, target.kind)
            return
        if kind == KIND_QUIZ:
            assert inst.quiz is not None
            _check_mcq(inst.quiz, where, add)
            return

        # composite: check child types, multiplicities, then recurse
        assert inst.children is not None
        counts: dict[str, int] = {}
        ordinals: dict[str, int] = {}
        for child in inst.children:
            counts[child.name] = counts.get(child.name, 0) + 1
        for child in inst.children:
            ordinal = ordinals.get(child.name, 0)
            ordinals[child.name] = ordinal + 1
            child_type = etype.child(child.name)
            child_ipath = ipath + ((child.name, ordinal if counts[child.name] > 1 else None),)
            if child_type is None:
                add("unknown-path", format_instance_path(child_ipath), "")
                continue
            walk(child, child_type, child_ipath)
        for child_type in etype.children:
            n = counts.get(child_type.name, 0)
            if child_type.multiplicity == MULT_ONE and n != 1:
                add("multiplicity", format_instance_path(ipath + ((child_type.name, None),)),
                    f"expected exactly 1, found {n}")
            elif child_type.multiplicity == MULT_OPTIONAL and n > 1:
                add("multiplicity", format_instance_path(ipath + ((child_type.name, None),)),
                    f"expected at most 1, found {n}")

    walk(doc.root, schema.root, ())


def validate_collection(c: Collection) -> ValidationReport:
    """Full conformance and referential-closure check.

    Violations are data, not exceptions; the report is deterministic and
    ordered by (document id, path, rule).
    """
    rows: list[Violation] = []

    def add_for(doc_id: str) -> Callable[[str, str, str], None]:
        def add(rule: str, path: str, detail: str) -> None:
            rows.append(Violation(rule=rule, doc_id=doc_id, path=path, detail=detail))

        return add

    collection_add = add_for("")
    _check_schema(c.schema, collection_add)
    _check_resources(c, collection_add)
    _check_annotations(c, collection_add)
    for doc_id in sorted(c.documents):
        doc = c.documents[doc_id]
        if doc.id != doc_id:
            collection_add("document-key-mismatch", doc_id, doc.id)
        _check_document(c, doc, add_for(doc_id))

    rows.sort(key=lambda v: (v.doc_id, v.path, v.rule))
    return ValidationReport(tuple(rows))


# ---------------------------------------------------------------------------
# Traversal and instance addressing helpers shared by curation and exporters.


def iter_instances(doc: Document) -> Iterator[tuple[InstancePath, ElementInstance]]:
    """Preorder walk yielding (instance path, node); root has path ()."""

    def walk(inst: ElementInstance, ipath: InstancePath) -> Iterator[tuple[InstancePath, ElementInstance]]:
        yield ipath, inst
        if inst.children:
            ordinals: dict[str, int] = {}
            for child in inst.children:
                ordinal = ordinals.get(child.name, 0)
                ordinals[child.name] = ordinal + 1
                yield from walk(child, ipath + ((child.name, ordinal),))

    return walk(doc.root, ())


def resolve_instance(root: ElementInstance, ipath: InstancePath) -> ElementInstance:
    """Resolve an instance path; bare segments must be unambiguous."""
    node = root
    for name, ordinal in ipath:
        if node.children is None:
            raise ModelError(f"{node.name!r} has no children to descend into")
        matches = [ch for ch in node.children if ch.name == name]
        if not matches:
            raise ModelError(f"no instance named {name!r} under {node.name!r}")
        if ordinal is None:
            if len(matches) > 1:
                raise ModelError(
                    f"{name!r} is ambiguous under {node.name!r} ({len(matches)} siblings); use {name}[k]")
            node = matches[0]
        else:
            if ordinal >= len(matches):
                raise ModelError(f"{name}[{ordinal}] out of range ({len(matches)} siblings)")
            node = matches[ordinal]
    return node


def rewrite_instance(root: ElementInstance, ipath: InstancePath,
                     fn: Callable[[ElementInstance], ElementInstance | None]) -> ElementInstance:
    """Return a new tree with fn applied to the node at ipath.

    fn returning None deletes the node (not allowed for the root).
    """
    if not ipath:
        out = fn(root)
        if out is None:
            raise ModelError("cannot delete the document root")
        return out
    (name, ordinal), rest = ipath[0], ipath[1:]
    if root.children is None:
        raise ModelError(f"{root.name!r} has no children")
    matches = [i for i, ch in enumerate(root.children) if ch.name == name]
    if not matches:
        raise ModelError(f"no instance named {name!r} under {root.name!r}")
    if ordinal is None:
        if len(matches) > 1:
            raise ModelError(f"{name!r} is ambiguous under {root.name!r}; use {name}[k]")
        index = matches[0]
    else:
        if ordinal >= len(matches):
            raise ModelError(f"{name}[{ordinal}] out of range")
        index = matches[ordinal]
    child = root.children[index]
    if rest:
        new_child: ElementInstance | None = rewrite_instance(child, rest, fn)
    else:
        new_child = fn(child)
    children = list(root.children)
    if new_child is None:
        del children[index]
    else:
        children[index] = new_child
    return replace(root, children=tuple(children))
