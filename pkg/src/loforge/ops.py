"""The curation algebra: schema operations with synchronized document rewriting.

Five schema ops (rename, remove, merge, move, group) reshape the schema and
every document with it. Document-level ops (set, insert, link, annotate) edit
one document or the annotation store. All of them flow through apply_op, which
is a pure snapshot-to-snapshot function: on success it returns a new collection
with version+1 and the op appended to the log; on any error the input
collection is returned untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Callable, Iterable, Sequence

from .model import (
    Annotation,
    Collection,
    Document,
    ElementInstance,
    ElementType,
    KIND_COMPOSITE,
    KIND_LINK,
    LINK_ANNOTATION,
    LINK_DOCUMENT,
    LINK_EXTERNAL,
    LinkTarget,
    LogRecord,
    Mcq,
    ModelError,
    MULT_MANY,
    MULT_ONE,
    MULT_OPTIONAL,
    image_dimensions,
    resolve_instance,
    rewrite_instance,
    validate_collection,
)
from .paths import (
    ElementPath,
    InstancePath,
    check_name,
    element_path_of,
    format_path,
    is_prefix,
    parse_instance_path,
    parse_path,
)


class OpError(ValueError):
    def __init__(self, rule: str, message: str, op_index: int | None = None):
        super().__init__(message)
        self.rule = rule
        self.op_index = op_index


# ---------------------------------------------------------------------------
# Op types

@dataclass(frozen=True)
class RenameOp:
    path: ElementPath
    new_name: str


@dataclass(frozen=True)
class RemoveOp:
    path: ElementPath


@dataclass(frozen=True)
class MergeOp:
    source_path: ElementPath
    target_path: ElementPath
    new_name: str | None = None


@dataclass(frozen=True)
class MoveOp:
    path: ElementPath
    new_parent_path: ElementPath
    index: int | None = None


@dataclass(frozen=True)
class GroupOp:
    paths: tuple[ElementPath, ...]
    new_name: str


@dataclass(frozen=True)
class TextPayload:
    text: str


@dataclass(frozen=True)
class ResourcePayload:
    resource_id: str


@dataclass(frozen=True)
class LinkPayload:
    target: LinkTarget


@dataclass(frozen=True)
class QuizPayload:
    quiz: Mcq


@dataclass(frozen=True)
class EmptyPayload:
    pass


InsertPayload = TextPayload | ResourcePayload | LinkPayload | QuizPayload | EmptyPayload


@dataclass(frozen=True)
class SetValueOp:
    doc_id: str
    instance_path: InstancePath
    text: str


@dataclass(frozen=True)
class InsertOp:
    doc_id: str
    parent_instance_path: InstancePath
    type_path: ElementPath
    payload: InsertPayload


@dataclass(frozen=True)
class LinkOp:
    doc_id: str
    parent_instance_path: InstancePath
    target: LinkTarget


@dataclass(frozen=True)
class AnnotateOp:
    resource_id: str
    x: int
    y: int
    w: int
    h: int
    comment: str
    author: str = ""


@dataclass(frozen=True)
class ImportEvent:
    """Log-only record of one import run (not applied through apply_op)."""

    plugin: str
    params: tuple[tuple[str, str], ...]
    counts: tuple[tuple[str, int], ...]


SCHEMA_OPS = (RenameOp, RemoveOp, MergeOp, MoveOp, GroupOp)
DOC_OPS = (SetValueOp, InsertOp, LinkOp, AnnotateOp)
CurationOp = (
    RenameOp | RemoveOp | MergeOp | MoveOp | GroupOp
    | SetValueOp | InsertOp | LinkOp | AnnotateOp
)


# ---------------------------------------------------------------------------
# Schema-tree surgery

_LOOSENESS = {MULT_ONE: 0, MULT_OPTIONAL: 1, MULT_MANY: 2}


def widen_multiplicity(*mults: str) -> str:
    return max(mults, key=lambda m: _LOOSENESS[m])


def needed_multiplicity(counts: Iterable[int]) -> str:
    counts = list(counts)
    if any(n > 1 for n in counts):
        return MULT_MANY
    if any(n == 0 for n in counts):
        return MULT_OPTIONAL
    return MULT_ONE


def _type_replace(node: ElementType, path: ElementPath,
                  fn: Callable[[ElementType], ElementType | None]) -> ElementType | None:
    if not path:
        return fn(node)
    out = []
    hit = False
    for child in node.children:
        if not hit and child.name == path[0]:
            hit = True
            new_child = _type_replace(child, path[1:], fn)
            if new_child is not None:
                out.append(new_child)
        else:
            out.append(child)
    if not hit:
        raise OpError("unknown-path", f"no element type at {format_path(path)}")
    return replace(node, children=tuple(out))


def _require_type(c: Collection, path: ElementPath) -> ElementType:
    node = c.schema.find(path)
    if node is None:
        raise OpError("unknown-path", f"no element type at {format_path(path)}")
    return node


def _check_collision(parent: ElementType, name: str) -> None:
    for child in parent.children:
        if child.name == name:
            raise OpError("name-collision",
                          f"{name!r} already names a sibling under {parent.name!r}")


def _check_removal_leaves_parent(c: Collection, path: ElementPath, removed: set[str]) -> None:
    """Non-root composites must keep >= 1 child after deleting `removed` names."""
    parent_path = path[:-1]
    if not parent_path:
        return  # the bare root may be emptied
    parent = _require_type(c, parent_path)
    survivors = [ch for ch in parent.children if ch.name not in removed]
    if not survivors:
        raise OpError(
            "would-empty-composite",
            f"removing {', '.join(sorted(removed))} would leave composite "
            f"{format_path(parent_path)} without children")


def _structurally_equal(a: ElementType, b: ElementType) -> bool:
    if a.kind != b.kind or a.multiplicity != b.multiplicity:
        return False
    if len(a.children) != len(b.children):
        return False
    return all(x.name == y.name and _structurally_equal(x, y)
               for x, y in zip(a.children, b.children))


# ---------------------------------------------------------------------------
# Document-tree surgery (instances carry local names; element paths are
# root-relative, so doc.root corresponds to the empty path)

def map_instances(inst: ElementInstance, path: ElementPath,
                  fn: Callable[[ElementInstance], ElementInstance | None]) -> ElementInstance | None:
    """Apply fn to every instance at `path` (fn -> None deletes it)."""
    if not path:
        return fn(inst)
    if inst.children is None:
        return inst
    out = []
    for child in inst.children:
        if child.name == path[0]:
            new_child = map_instances(child, path[1:], fn)
            if new_child is not None:
                out.append(new_child)
        else:
            out.append(child)
    return replace(inst, children=tuple(out))


def gather_instances(inst: ElementInstance, path: ElementPath) -> list[ElementInstance]:
    if not path:
        return [inst]
    if inst.children is None:
        return []
    found: list[ElementInstance] = []
    for child in inst.children:
        if child.name == path[0]:
            found.extend(gather_instances(child, path[1:]))
    return found


def extract_instances(root: ElementInstance, path: ElementPath) -> tuple[ElementInstance, list[ElementInstance]]:
    """Remove every instance at `path`, returning them in document order."""
    acc: list[ElementInstance] = []

    def take(node: ElementInstance) -> None:
        acc.append(node)
        return None

    new_root = map_instances(root, path, take)
    assert new_root is not None
    return new_root, acc


def count_value_instances(inst: ElementInstance) -> int:
    """Leaf (element-value pair) count: every non-composite instance."""
    if inst.children is None:
        return 1
    return sum(count_value_instances(ch) for ch in inst.children)


def _insert_after_same(children: tuple[ElementInstance, ...],
                       new_items: Sequence[ElementInstance],
                       name: str) -> tuple[ElementInstance, ...]:
    idxs = [i for i, ch in enumerate(children) if ch.name == name]
    pos = idxs[-1] + 1 if idxs else len(children)
    return children[:pos] + tuple(new_items) + children[pos:]


def _create_parent_instance(root: ElementInstance, path: ElementPath,
                            doc_id: str) -> ElementInstance:
    """Ensure exactly one composite instance exists at `path`, creating empty
    ancestors one level at a time; > 1 candidates at any level is ambiguous."""
    if not path:
        return root
    existing = gather_instances(root, path)
    if len(existing) == 1:
        return root
    if len(existing) > 1:
        raise OpError("ambiguous-reattachment",
                      f"document {doc_id!r} holds {len(existing)} instances of "
                      f"{format_path(path)}; re-attachment is ambiguous")
    root = _create_parent_instance(root, path[:-1], doc_id)

    def append_empty(node: ElementInstance) -> ElementInstance:
        assert node.children is not None
        return replace(node, children=node.children + (ElementInstance.composite(path[-1]),))

    new_root = map_instances(root, path[:-1], append_empty)
    assert new_root is not None
    return new_root


def _attach_instances(root: ElementInstance, parent_path: ElementPath,
                      items: Sequence[ElementInstance], doc_id: str,
                      after_name: str | None = None) -> ElementInstance:
    """Attach items inside the unique parent instance (created if missing).

    after_name places items after the last same-named sibling; None appends.
    """
    if not items:
        return root
    root = _create_parent_instance(root, parent_path, doc_id)

    def put(node: ElementInstance) -> ElementInstance:
        if node.children is None:
            raise OpError("parent-not-composite",
                          f"{format_path(parent_path)} is not composite in document {doc_id!r}")
        if after_name is None:
            return replace(node, children=node.children + tuple(items))
        return replace(node, children=_insert_after_same(node.children, items, after_name))

    new_root = map_instances(root, parent_path, put)
    assert new_root is not None
    return new_root


# ---------------------------------------------------------------------------
# Schema-op implementations (data changes only; apply_op adds version + log)

def _rewrite_docs(c: Collection, fn: Callable[[Document], Document]) -> dict[str, Document]:
    return {doc_id: fn(doc) for doc_id, doc in c.documents.items()}


def _observed_counts(docs: dict[str, Document], parent_path: ElementPath, name: str) -> list[int]:
    counts: list[int] = []
    for doc in docs.values():
        for parent in gather_instances(doc.root, parent_path):
            if parent.children is not None:
                counts.append(sum(1 for ch in parent.children if ch.name == name))
    return counts


def _apply_rename(c: Collection, op: RenameOp) -> Collection:
    node = _require_type(c, op.path)
    check_name(op.new_name)
    if op.path and op.new_name != node.name:
        _check_collision(_require_type(c, op.path[:-1]), op.new_name)
    new_root = _type_replace(c.schema.root, op.path, lambda n: replace(n, name=op.new_name))
    assert new_root is not None

    def rename_doc(doc: Document) -> Document:
        root = map_instances(doc.root, op.path, lambda i: replace(i, name=op.new_name))
        assert root is not None
        return replace(doc, root=root)

    return replace(c, schema=replace(c.schema, root=new_root),
                   documents=_rewrite_docs(c, rename_doc))


def _apply_remove(c: Collection, op: RemoveOp) -> Collection:
    if not op.path:
        raise OpError("root-immutable", "the root type cannot be removed")
    _require_type(c, op.path)
    _check_removal_leaves_parent(c, op.path, {op.path[-1]})
    new_root = _type_replace(c.schema.root, op.path, lambda n: None)
    assert new_root is not None

    def remove_doc(doc: Document) -> Document:
        root = map_instances(doc.root, op.path, lambda i: None)
        assert root is not None
        return replace(doc, root=root)

    return replace(c, schema=replace(c.schema, root=new_root),
                   documents=_rewrite_docs(c, remove_doc))


def _apply_merge(c: Collection, op: MergeOp) -> Collection:
    if op.source_path == op.target_path:
        raise OpError("same-path", "merge source and target are the same type")
    if is_prefix(op.source_path, op.target_path) or is_prefix(op.target_path, op.source_path):
        raise OpError("nested-paths", "merge source and target may not be nested")
    source = _require_type(c, op.source_path)
    target = _require_type(c, op.target_path)
    if source.kind != target.kind:
        raise OpError("kind-mismatch",
                      f"cannot merge {source.kind} {format_path(op.source_path)} "
                      f"into {target.kind} {format_path(op.target_path)}")
    if source.kind == KIND_COMPOSITE and not _structurally_equal(
            replace(source, multiplicity=MULT_ONE),
            replace(target, multiplicity=MULT_ONE)):
        raise OpError("structure-mismatch",
                      "composite merge requires identical subtree structure")

    final_name = op.new_name if op.new_name is not None else target.name
    check_name(final_name)
    target_parent_path = op.target_path[:-1]
    same_parent = target_parent_path == op.source_path[:-1]
    if final_name != target.name:
        parent = _require_type(c, target_parent_path)
        taken = {ch.name for ch in parent.children} - {target.name}
        if same_parent:
            taken -= {source.name}
        if final_name in taken:
            raise OpError("name-collision",
                          f"{final_name!r} already names a sibling under "
                          f"{format_path(target_parent_path)}")
    _check_removal_leaves_parent(c, op.source_path, {source.name})

    final_target_path = target_parent_path + (final_name,)

    def merge_doc(doc: Document) -> Document:
        root = doc.root
        if final_name != target.name:
            renamed = map_instances(root, op.target_path, lambda i: replace(i, name=final_name))
            assert renamed is not None
            root = renamed
        root, extracted = extract_instances(root, op.source_path)
        retyped = [replace(e, name=final_name) for e in extracted]
        root = _attach_instances(root, target_parent_path, retyped, doc.id, after_name=final_name)
        return replace(doc, root=root)

    new_docs = _rewrite_docs(c, merge_doc)

    # schema: drop source, rename target, widen multiplicity to the loosest
    # of (source, target, observed counts)
    schema_root = _type_replace(c.schema.root, op.source_path, lambda n: None)
    assert schema_root is not None
    need = needed_multiplicity(_observed_counts(new_docs, target_parent_path, final_name))
    final_mult = widen_multiplicity(source.multiplicity, target.multiplicity, need)

    def rewrite_target(n: ElementType) -> ElementType:
        return replace(n, name=final_name, multiplicity=final_mult)

    schema_root = _type_replace(schema_root, op.target_path, rewrite_target)
    assert schema_root is not None
    return replace(c, schema=replace(c.schema, root=schema_root), documents=new_docs)


def _apply_move(c: Collection, op: MoveOp) -> Collection:
    node = _require_type(c, op.path)
    if is_prefix(op.path, op.new_parent_path):
        raise OpError("cycle", f"cannot move {format_path(op.path)} under its own subtree")
    new_parent = _require_type(c, op.new_parent_path)
    if new_parent.kind != KIND_COMPOSITE:
        raise OpError("parent-not-composite",
                      f"{format_path(op.new_parent_path)} is {new_parent.kind}, not composite")
    old_parent_path = op.path[:-1]

    if op.new_parent_path == old_parent_path:
        # sibling reorder: schema order changes, documents untouched
        def reorder(parent: ElementType) -> ElementType:
            kids = [ch for ch in parent.children if ch.name != node.name]
            pos = len(kids) if op.index is None else max(0, min(op.index, len(kids)))
            kids.insert(pos, node)
            return replace(parent, children=tuple(kids))

        schema_root = _type_replace(c.schema.root, old_parent_path, reorder)
        assert schema_root is not None
        return replace(c, schema=replace(c.schema, root=schema_root))

    _check_collision(new_parent, node.name)
    _check_removal_leaves_parent(c, op.path, {node.name})

    def move_doc(doc: Document) -> Document:
        root, extracted = extract_instances(doc.root, op.path)
        root = _attach_instances(root, op.new_parent_path, extracted, doc.id)
        return replace(doc, root=root)

    new_docs = _rewrite_docs(c, move_doc)

    schema_root = _type_replace(c.schema.root, op.path, lambda n: None)
    assert schema_root is not None
    need = needed_multiplicity(_observed_counts(new_docs, op.new_parent_path, node.name))
    moved = replace(node, multiplicity=widen_multiplicity(node.multiplicity, need))

    def insert_child(parent: ElementType) -> ElementType:
        kids = list(parent.children)
        pos = len(kids) if op.index is None else max(0, min(op.index, len(kids)))
        kids.insert(pos, moved)
        return replace(parent, children=tuple(kids))

    schema_root = _type_replace(schema_root, op.new_parent_path, insert_child)
    assert schema_root is not None
    return replace(c, schema=replace(c.schema, root=schema_root), documents=new_docs)


def _apply_group(c: Collection, op: GroupOp) -> Collection:
    if not op.paths:
        raise OpError("unknown-path", "group needs at least one path")
    if any(not p for p in op.paths):
        raise OpError("root-immutable", "the root type cannot be grouped")
    if len(set(op.paths)) != len(op.paths):
        raise OpError("same-path", "group paths must be distinct")
    check_name(op.new_name)
    parent_path = op.paths[0][:-1]
    for p in op.paths:
        if p[:-1] != parent_path:
            raise OpError("not-siblings",
                          f"{format_path(p)} is not a sibling of {format_path(op.paths[0])}")
    members = [_require_type(c, p) for p in op.paths]
    member_names = [m.name for m in members]
    parent = _require_type(c, parent_path)
    remaining = [ch.name for ch in parent.children if ch.name not in member_names]
    if op.new_name in remaining:
        raise OpError("name-collision",
                      f"{op.new_name!r} already names a sibling under {parent.name!r}")

    group_type = ElementType(op.new_name, KIND_COMPOSITE, MULT_ONE, tuple(members))

    def regroup_types(p: ElementType) -> ElementType:
        names = [ch.name for ch in p.children]
        first = names.index(member_names[0])
        kept = [ch for ch in p.children if ch.name not in member_names]
        # insertion point: how many kept children precede the first member
        pos = sum(1 for ch in p.children[:first] if ch.name not in member_names)
        kept.insert(pos, group_type)
        return replace(p, children=tuple(kept))

    schema_root = _type_replace(c.schema.root, parent_path, regroup_types)
    assert schema_root is not None

    member_set = set(member_names)

    def regroup_instance(inst: ElementInstance) -> ElementInstance:
        assert inst.children is not None
        grouped = [ch for name in member_names for ch in inst.children if ch.name == name]
        kept = [ch for ch in inst.children if ch.name not in member_set]
        firsts = [i for i, ch in enumerate(inst.children) if ch.name in member_set]
        pos = (sum(1 for ch in inst.children[:firsts[0]] if ch.name not in member_set)
               if firsts else len(kept))
        kept.insert(pos, ElementInstance.composite(op.new_name, tuple(grouped)))
        return replace(inst, children=tuple(kept))

    def regroup_doc(doc: Document) -> Document:
        root = map_instances(doc.root, parent_path, regroup_instance)
        assert root is not None
        return replace(doc, root=root)

    return replace(c, schema=replace(c.schema, root=schema_root),
                   documents=_rewrite_docs(c, regroup_doc))


# ---------------------------------------------------------------------------
# Document-op implementations

def _require_doc(c: Collection, doc_id: str) -> Document:
    doc = c.documents.get(doc_id)
    if doc is None:
        raise OpError("unknown-document", f"no document {doc_id!r}")
    return doc


def _resolve(root: ElementInstance, ipath: InstancePath) -> ElementInstance:
    try:
        return resolve_instance(root, ipath)
    except ModelError as e:
        raise OpError("unknown-instance", str(e)) from e


def _apply_set_value(c: Collection, op: SetValueOp) -> Collection:
    doc = _require_doc(c, op.doc_id)
    inst = _resolve(doc.root, op.instance_path)
    if inst.text is None:
        raise OpError("non-atomic",
                      f"{format_path(element_path_of(op.instance_path))} is not an atomic instance")
    new_root = rewrite_instance(doc.root, op.instance_path, lambda i: replace(i, text=op.text))
    docs = dict(c.documents)
    docs[op.doc_id] = replace(doc, root=new_root)
    return replace(c, documents=docs)


def _check_link_target(c: Collection, target: LinkTarget) -> None:
    if target.kind == LINK_DOCUMENT:
        if target.value not in c.documents:
            raise OpError("dangling-target", f"no document {target.value!r}")
    elif target.kind == LINK_ANNOTATION:
        if target.value not in c.annotations:
            raise OpError("dangling-target", f"no annotation {target.value!r}")
    elif target.kind == LINK_EXTERNAL:
        from .model import _valid_external_url

        if not _valid_external_url(target.value):
            raise OpError("bad-url", f"malformed external URL {target.value!r}")
    else:
        raise OpError("bad-link-kind", f"unknown link kind {target.kind!r}")


def _payload_instance(c: Collection, etype: ElementType, payload: InsertPayload) -> ElementInstance:
    kind_by_payload = {
        TextPayload: "atomic",
        ResourcePayload: "resource-ref",
        LinkPayload: "link",
        QuizPayload: "quiz",
        EmptyPayload: "composite",
    }
    want = kind_by_payload[type(payload)]
    if etype.kind != want:
        raise OpError("kind-mismatch", f"{etype.name!r} is {etype.kind}, payload is {want}")
    if isinstance(payload, TextPayload):
        return ElementInstance.atomic(etype.name, payload.text)
    if isinstance(payload, ResourcePayload):
        if payload.resource_id not in c.resources:
            raise OpError("dangling-target", f"no resource {payload.resource_id!r}")
        return ElementInstance.resource(etype.name, payload.resource_id)
    if isinstance(payload, LinkPayload):
        _check_link_target(c, payload.target)
        return ElementInstance.of_link(etype.name, payload.target)
    if isinstance(payload, QuizPayload):
        return ElementInstance.of_quiz(etype.name, payload.quiz)
    return ElementInstance.composite(etype.name)


def _check_room(parent_inst: ElementInstance, etype: ElementType) -> None:
    assert parent_inst.children is not None
    n = sum(1 for ch in parent_inst.children if ch.name == etype.name)
    if etype.multiplicity != MULT_MANY and n >= 1:
        raise OpError("multiplicity",
                      f"{etype.name!r} has multiplicity {etype.multiplicity}; "
                      f"parent already holds {n}")


def _apply_insert(c: Collection, op: InsertOp) -> Collection:
    doc = _require_doc(c, op.doc_id)
    parent_inst = _resolve(doc.root, op.parent_instance_path)
    if parent_inst.children is None:
        raise OpError("parent-not-composite", "insertion parent is not composite")
    parent_epath = element_path_of(op.parent_instance_path)
    if op.type_path[:-1] != parent_epath:
        raise OpError("not-a-child",
                      f"{format_path(op.type_path)} is not a child of {format_path(parent_epath)}")
    etype = c.schema.find(op.type_path)
    if etype is None:
        raise OpError("unknown-path", f"no element type at {format_path(op.type_path)}")
    _check_room(parent_inst, etype)
    new_inst = _payload_instance(c, etype, op.payload)

    def put(parent: ElementInstance) -> ElementInstance:
        assert parent.children is not None
        return replace(parent, children=_insert_after_same(parent.children, [new_inst], etype.name))

    new_root = rewrite_instance(doc.root, op.parent_instance_path, put)
    docs = dict(c.documents)
    docs[op.doc_id] = replace(doc, root=new_root)
    return replace(c, documents=docs)


def _apply_link(c: Collection, op: LinkOp) -> Collection:
    doc = _require_doc(c, op.doc_id)
    parent_inst = _resolve(doc.root, op.parent_instance_path)
    if parent_inst.children is None:
        raise OpError("parent-not-composite", "link parent is not composite")
    parent_epath = element_path_of(op.parent_instance_path)
    parent_type = c.schema.find(parent_epath)
    if parent_type is None:
        raise OpError("unknown-path", f"no element type at {format_path(parent_epath)}")
    link_children = [ch for ch in parent_type.children if ch.kind == KIND_LINK]
    if not link_children:
        raise OpError("no-link-child",
                      f"{format_path(parent_epath)} has no link-kind child type")
    if len(link_children) > 1:
        raise OpError("ambiguous-link-child",
                      f"{format_path(parent_epath)} has several link children; "
                      "insert the specific type instead")
    etype = link_children[0]
    _check_room(parent_inst, etype)
    _check_link_target(c, op.target)
    new_inst = ElementInstance.of_link(etype.name, op.target)

    def put(parent: ElementInstance) -> ElementInstance:
        assert parent.children is not None
        return replace(parent, children=_insert_after_same(parent.children, [new_inst], etype.name))

    new_root = rewrite_instance(doc.root, op.parent_instance_path, put)
    docs = dict(c.documents)
    docs[op.doc_id] = replace(doc, root=new_root)
    return replace(c, documents=docs)


def _apply_annotate(c: Collection, op: AnnotateOp) -> Collection:
    res = c.resources.get(op.resource_id)
    if res is None:
        raise OpError("unknown-resource", f"no resource {op.resource_id!r}")
    if not res.media_type.startswith("image/"):
        raise OpError("not-image", f"resource {op.resource_id} is {res.media_type}")
    if not op.comment:
        raise OpError("empty-comment", "annotation comment must be non-empty")
    if op.w <= 0 or op.h <= 0 or op.x < 0 or op.y < 0:
        raise OpError("bad-region", f"region {op.x},{op.y},{op.w},{op.h} is not positive-sized")
    data = c.resource_bytes.get(op.resource_id)
    if data is not None:
        dims = image_dimensions(data)
        if dims is not None:
            width, height = dims
            if op.x + op.w > width or op.y + op.h > height:
                raise OpError("out-of-bounds",
                              f"region exceeds image bounds {width}x{height}")
    ann = Annotation.make(op.resource_id, op.x, op.y, op.w, op.h, op.comment, op.author)
    if ann.id in c.annotations:
        return c  # idempotent re-add
    annotations = dict(c.annotations)
    annotations[ann.id] = ann
    return replace(c, annotations=annotations)


_DISPATCH: dict[type, Callable[[Collection, Any], Collection]] = {
    RenameOp: _apply_rename,
    RemoveOp: _apply_remove,
    MergeOp: _apply_merge,
    MoveOp: _apply_move,
    GroupOp: _apply_group,
    SetValueOp: _apply_set_value,
    InsertOp: _apply_insert,
    LinkOp: _apply_link,
    AnnotateOp: _apply_annotate,
}


def bump(c: Collection, entry: Any) -> Collection:
    """Advance the version by one and append a log record."""
    pre = c.schema.version
    return replace(
        c,
        schema=replace(c.schema, version=pre + 1),
        log=c.log + (LogRecord(pre_version=pre, post_version=pre + 1, entry=entry),),
    )


def apply_op(c: Collection, op: CurationOp) -> Collection:
    """Apply one op; returns a new conformant snapshot or raises OpError.

    The input collection is never modified; a failed op has no side effects.
    """
    fn = _DISPATCH.get(type(op))
    if fn is None:
        raise OpError("unknown-op", f"unsupported op {type(op).__name__}")
    mutated = fn(c, op)
    if mutated is c:
        return c  # idempotent no-op (annotate re-add)
    mutated = bump(mutated, op)
    report = validate_collection(mutated)
    if not report.ok:
        raise OpError("validation-failed",
                      f"op would leave the collection invalid:\n{report}")
    return mutated


@dataclass(frozen=True)
class OpOutcome:
    index: int
    op: CurationOp
    ok: bool
    error: str = ""
    rule: str = ""


@dataclass(frozen=True)
class ScriptResult:
    collection: Collection
    outcomes: tuple[OpOutcome, ...]
    failed_index: int | None = None

    @property
    def ok(self) -> bool:
        return self.failed_index is None


def apply_script(c: Collection, script: Any) -> ScriptResult:
    """Apply a script atomically: the first failing op aborts the whole run
    and the original collection is returned with the failure report."""
    ops: Sequence[CurationOp] = getattr(script, "ops", script)
    current = c
    outcomes: list[OpOutcome] = []
    for i, op in enumerate(ops):
        try:
            current = apply_op(current, op)
        except OpError as e:
            outcomes.append(OpOutcome(i, op, False, error=str(e), rule=e.rule))
            return ScriptResult(collection=c, outcomes=tuple(outcomes), failed_index=i)
        outcomes.append(OpOutcome(i, op, True))
    return ScriptResult(collection=current, outcomes=tuple(outcomes))


# ---------------------------------------------------------------------------
# JSON encoding of ops and log entries (used by canonical serialization and
# the HTTP API)

def _payload_to_obj(p: InsertPayload) -> dict:
    if isinstance(p, TextPayload):
        return {"kind": "text", "text": p.text}
    if isinstance(p, ResourcePayload):
        return {"kind": "resource", "resource_id": p.resource_id}
    if isinstance(p, LinkPayload):
        return {"kind": "link", "target": {"kind": p.target.kind, "value": p.target.value}}
    if isinstance(p, QuizPayload):
        q = p.quiz
        return {"kind": "quiz", "quiz": {"stem": q.stem, "choices": list(q.choices),
                                         "correct_index": q.correct_index,
                                         "explanation": q.explanation}}
    return {"kind": "empty"}


def _payload_from_obj(obj: dict) -> InsertPayload:
    kind = obj.get("kind")
    if kind == "text":
        return TextPayload(obj["text"])
    if kind == "resource":
        return ResourcePayload(obj["resource_id"])
    if kind == "link":
        t = obj["target"]
        return LinkPayload(LinkTarget(t["kind"], t["value"]))
    if kind == "quiz":
        q = obj["quiz"]
        return QuizPayload(Mcq(q["stem"], tuple(q["choices"]), q["correct_index"],
                               q.get("explanation", "")))
    if kind == "empty":
        return EmptyPayload()
    raise ValueError(f"unknown payload kind {kind!r}")


def entry_to_obj(entry: Any) -> dict:
    if isinstance(entry, RenameOp):
        return {"op": "rename", "path": format_path(entry.path), "new_name": entry.new_name}
    if isinstance(entry, RemoveOp):
        return {"op": "remove", "path": format_path(entry.path)}
    if isinstance(entry, MergeOp):
        obj = {"op": "merge", "source": format_path(entry.source_path),
               "target": format_path(entry.target_path)}
        if entry.new_name is not None:
            obj["new_name"] = entry.new_name
        return obj
    if isinstance(entry, MoveOp):
        obj = {"op": "move", "path": format_path(entry.path),
               "new_parent": format_path(entry.new_parent_path)}
        if entry.index is not None:
            obj["index"] = entry.index
        return obj
    if isinstance(entry, GroupOp):
        return {"op": "group", "paths": [format_path(p) for p in entry.paths],
                "new_name": entry.new_name}
    if isinstance(entry, SetValueOp):
        from .paths import format_instance_path

        return {"op": "set", "doc_id": entry.doc_id,
                "instance_path": format_instance_path(entry.instance_path),
                "text": entry.text}
    if isinstance(entry, InsertOp):
        from .paths import format_instance_path

        return {"op": "insert", "doc_id": entry.doc_id,
                "parent": format_instance_path(entry.parent_instance_path),
                "type_path": format_path(entry.type_path),
                "payload": _payload_to_obj(entry.payload)}
    if isinstance(entry, LinkOp):
        from .paths import format_instance_path

        return {"op": "link", "doc_id": entry.doc_id,
                "parent": format_instance_path(entry.parent_instance_path),
                "target": {"kind": entry.target.kind, "value": entry.target.value}}
    if isinstance(entry, AnnotateOp):
        return {"op": "annotate", "resource_id": entry.resource_id,
                "x": entry.x, "y": entry.y, "w": entry.w, "h": entry.h,
                "comment": entry.comment, "author": entry.author}
    if isinstance(entry, ImportEvent):
        return {"op": "import", "plugin": entry.plugin,
                "params": {k: v for k, v in entry.params},
                "counts": {k: v for k, v in entry.counts}}
    raise ValueError(f"unknown log entry {type(entry).__name__}")


def entry_from_obj(obj: dict) -> Any:
    kind = obj.get("op")
    if kind == "rename":
        return RenameOp(parse_path(obj["path"]), obj["new_name"])
    if kind == "remove":
        return RemoveOp(parse_path(obj["path"]))
    if kind == "merge":
        return MergeOp(parse_path(obj["source"]), parse_path(obj["target"]),
                       obj.get("new_name"))
    if kind == "move":
        return MoveOp(parse_path(obj["path"]), parse_path(obj["new_parent"]),
                      obj.get("index"))
    if kind == "group":
        return GroupOp(tuple(parse_path(p) for p in obj["paths"]), obj["new_name"])
    if kind == "set":
        return SetValueOp(obj["doc_id"], parse_instance_path(obj["instance_path"]), obj["text"])
    if kind == "insert":
        return InsertOp(obj["doc_id"], parse_instance_path(obj["parent"]),
                        parse_path(obj["type_path"]), _payload_from_obj(obj["payload"]))
    if kind == "link":
        t = obj["target"]
        return LinkOp(obj["doc_id"], parse_instance_path(obj["parent"]),
                      LinkTarget(t["kind"], t["value"]))
    if kind == "annotate":
        return AnnotateOp(obj["resource_id"], obj["x"], obj["y"], obj["w"], obj["h"],
                          obj["comment"], obj.get("author", ""))
    if kind == "import":
        return ImportEvent(obj["plugin"],
                           tuple(sorted(obj.get("params", {}).items())),
                           tuple(sorted(obj.get("counts", {}).items())))
    raise ValueError(f"unknown log entry kind {kind!r}")
