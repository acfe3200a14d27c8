"""Seeded generators for random collections and ops, plus an independent
plain-tuple tree oracle used to cross-check op results.

The oracle represents a document as nested tuples and re-implements each
op's documented rewriting with separate code, so agreement between the
two is meaningful.
"""

from __future__ import annotations

import io
import random

from loforge.model import (
    Annotation,
    Collection,
    Document,
    ElementInstance,
    ElementType,
    KIND_ATOMIC,
    KIND_COMPOSITE,
    KIND_LINK,
    KIND_QUIZ,
    KIND_RESOURCE,
    LINK_DOCUMENT,
    LINK_EXTERNAL,
    LinkTarget,
    Mcq,
    MULT_MANY,
    MULT_ONE,
    MULT_OPTIONAL,
    Origin,
    Resource,
    Schema,
    annotation_id,
    validate_collection,
)
from loforge import ops

NAMES = ("Alpha", "Beta", "Gamma", "Delta", "Epsilon", "Zeta", "Eta",
         "Theta", "Iota", "Kappa", "Lamda", "Mu", "Nu", "Xi", "Omicron",
         "Pi", "Rho", "Sigma", "Tau", "Upsilon")

WORDS = ("cardiac", "lesion", "femur", "axial", "contrast", "biopsy",
         "distal", "nodule", "cortex", "sagittal", "benign", "acute")


def _png(rng: random.Random, width: int = 64, height: int = 48) -> bytes:
    from PIL import Image

    img = Image.new("RGB", (width, height),
                    (rng.randrange(256), rng.randrange(256), rng.randrange(256)))
    for _ in range(4):
        x = rng.randrange(width)
        y = rng.randrange(height)
        img.putpixel((x, y), (rng.randrange(256), 0, 0))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


class Gen:
    def __init__(self, seed: int):
        self.rng = random.Random(seed)

    # ------------------------------------------------------------------
    # schema blueprint

    def _schema(self) -> ElementType:
        rng = self.rng

        def build(names: list[str], depth: int) -> tuple[ElementType, ...]:
            children = []
            for name in names:
                if depth < 2 and rng.random() < 0.3:
                    kind = KIND_COMPOSITE
                else:
                    kind = rng.choices(
                        (KIND_ATOMIC, KIND_RESOURCE, KIND_LINK, KIND_QUIZ),
                        weights=(8, 1, 1, 1))[0]
                mult = rng.choices((MULT_ONE, MULT_OPTIONAL, MULT_MANY),
                                   weights=(4, 3, 3))[0]
                if kind == KIND_COMPOSITE:
                    sub_names = rng.sample(NAMES, rng.randint(1, 4))
                    children.append(ElementType(name, kind, mult,
                                                build(sub_names, depth + 1)))
                else:
                    children.append(ElementType(name, kind, mult))
            return tuple(children)

        top = self.rng.sample(NAMES, self.rng.randint(2, 5))
        return ElementType("record", KIND_COMPOSITE, MULT_ONE, build(top, 0))

    # ------------------------------------------------------------------
    # documents

    def _instance(self, etype: ElementType, doc_ids: list[str],
                  local_rids: list[str], all_rids: list[str]) -> ElementInstance:
        rng = self.rng
        if etype.kind == KIND_COMPOSITE:
            children = []
            for child in etype.children:
                for _ in range(self._count(child.multiplicity)):
                    children.append(self._instance(child, doc_ids,
                                                   local_rids, all_rids))
            return ElementInstance.composite(etype.name, tuple(children))
        if etype.kind == KIND_ATOMIC:
            return ElementInstance.atomic(
                etype.name, " ".join(rng.sample(WORDS, rng.randint(1, 3))))
        if etype.kind == KIND_RESOURCE:
            return ElementInstance.resource(etype.name, rng.choice(all_rids))
        if etype.kind == KIND_LINK:
            if rng.random() < 0.5:
                return ElementInstance.of_link(
                    etype.name, LinkTarget(LINK_DOCUMENT, rng.choice(doc_ids)))
            return ElementInstance.of_link(
                etype.name,
                LinkTarget(LINK_EXTERNAL, f"https://example.org/{rng.randrange(100)}"))
        choices = tuple(rng.sample(WORDS, rng.randint(2, 4)))
        quiz = Mcq(stem=f"Which {rng.choice(WORDS)}?", choices=choices,
                   correct_index=rng.randrange(len(choices)),
                   explanation=rng.choice(("", "because " + rng.choice(WORDS))))
        return ElementInstance.of_quiz(etype.name, quiz)

    def _count(self, mult: str) -> int:
        if mult == MULT_ONE:
            return 1
        if mult == MULT_OPTIONAL:
            return self.rng.randint(0, 1)
        return self.rng.choices((0, 1, 2, 3), weights=(2, 4, 3, 1))[0]

    # ------------------------------------------------------------------

    def collection(self) -> Collection:
        rng = self.rng
        root_type = self._schema()
        n_docs = rng.randint(2, 5)
        doc_ids = [f"doc-{i:03d}" for i in range(n_docs)]

        resources: dict[str, Resource] = {}
        resource_bytes: dict[str, bytes] = {}
        local_rids: list[str] = []
        for _ in range(rng.randint(1, 3)):
            data = _png(rng)
            res = Resource.local(data, "image/png")
            resources[res.id] = res
            resource_bytes[res.id] = data
            if res.id not in local_rids:
                local_rids.append(res.id)
        ext = Resource.external(f"https://example.org/ref/{rng.randrange(50)}")
        resources[ext.id] = ext
        all_rids = sorted(resources)

        documents = {}
        for doc_id in doc_ids:
            root = self._instance(root_type, doc_ids, local_rids, all_rids)
            documents[doc_id] = Document(
                id=doc_id, root=root,
                origin=Origin(plugin="gen", locator=f"gen://{doc_id}"))

        annotations: dict[str, Annotation] = {}
        for _ in range(rng.randint(0, 2)):
            rid = rng.choice(local_rids)
            x, y = rng.randint(0, 30), rng.randint(0, 20)
            w, h = rng.randint(1, 20), rng.randint(1, 15)
            comment = rng.choice(WORDS)
            aid = annotation_id(rid, x, y, w, h, comment)
            annotations[aid] = Annotation(aid, rid, x, y, w, h, comment)

        c = Collection(schema=Schema(root=root_type, version=0),
                       documents=documents, resources=resources,
                       resource_bytes=resource_bytes,
                       annotations=annotations)
        report = validate_collection(c)
        assert report.ok, f"generator produced invalid collection:\n{report}"
        return c

    # ------------------------------------------------------------------
    # ops

    def _paths(self, c: Collection) -> list[tuple[str, ...]]:
        return list(c.schema.paths())

    def _fresh_name(self, c: Collection) -> str:
        used = {c.schema.find(p).name for p in c.schema.paths()}
        pool = [n for n in NAMES if n not in used]
        return self.rng.choice(pool) if pool else f"New{self.rng.randrange(1000)}"

    def random_op(self, c: Collection):
        rng = self.rng
        paths = self._paths(c)
        if not paths:
            # schema was emptied by removes; only root ops remain applicable
            return ops.RenameOp((), self._fresh_name(c))
        kind = rng.choices(
            ("rename", "remove", "merge", "move", "group",
             "set", "insert", "link", "annotate"),
            weights=(3, 3, 2, 3, 2, 3, 3, 1, 1))[0]
        if kind == "rename":
            return ops.RenameOp(rng.choice(paths), self._fresh_name(c))
        if kind == "remove":
            # avoid collapsing the whole schema so later ops stay interesting
            top = [p for p in paths if len(p) == 1]
            cands = [p for p in paths if not (len(p) == 1 and len(top) == 1)]
            return ops.RemoveOp(rng.choice(cands or paths))
        if kind == "merge":
            by_kind: dict[str, list] = {}
            for p in paths:
                by_kind.setdefault(c.schema.find(p).kind, []).append(p)
            pairs = [(a, b) for plist in by_kind.values()
                     for a in plist for b in plist
                     if a != b and a[:len(b)] != b and b[:len(a)] != a]
            if not pairs:
                return ops.RenameOp(rng.choice(paths), self._fresh_name(c))
            source, target = rng.choice(pairs)
            new_name = self._fresh_name(c) if rng.random() < 0.3 else None
            return ops.MergeOp(source, target, new_name)
        if kind == "move":
            composites = [p for p in paths
                          if c.schema.find(p).kind == KIND_COMPOSITE] + [()]
            path = rng.choice(paths)
            parent = rng.choice(composites)
            index = rng.randrange(5) if rng.random() < 0.4 else None
            return ops.MoveOp(path, parent, index)
        if kind == "group":
            parents = [p for p in [()] + paths
                       if c.schema.find(p).kind == KIND_COMPOSITE
                       and len(c.schema.find(p).children) >= 2]
            if not parents:
                return ops.RenameOp(rng.choice(paths), self._fresh_name(c))
            pp = rng.choice(parents)
            kids = list(c.schema.find(pp).children)
            take = rng.sample(kids, rng.randint(1, min(len(kids), 3)))
            return ops.GroupOp(tuple(pp + (k.name,) for k in take),
                               self._fresh_name(c))
        # document ops need a target instance
        doc_id = rng.choice(sorted(c.documents))
        doc = c.documents[doc_id]
        if kind == "set":
            atoms = instance_paths(doc.root, lambda i: i.text is not None)
            if not atoms:
                return ops.RenameOp(rng.choice(paths), self._fresh_name(c))
            return ops.SetValueOp(doc_id, rng.choice(atoms),
                                  " ".join(rng.sample(WORDS, 2)))
        if kind == "insert":
            comps = instance_paths(doc.root, lambda i: i.children is not None)
            comps.append(())
            parent_ipath = tuple(rng.choice(comps))
            parent_epath = tuple(name for name, _ in parent_ipath)
            ptype = c.schema.find(parent_epath)
            if ptype is None or not ptype.children:
                return ops.RenameOp(rng.choice(paths), self._fresh_name(c))
            child = rng.choice(list(ptype.children))
            payload = self._payload_for(c, child)
            return ops.InsertOp(doc_id, parent_ipath,
                                parent_epath + (child.name,), payload)
        if kind == "link":
            comps = instance_paths(doc.root, lambda i: i.children is not None)
            comps.append(())
            parent_ipath = tuple(rng.choice(comps))
            target = (LinkTarget(LINK_DOCUMENT, rng.choice(sorted(c.documents)))
                      if rng.random() < 0.7 else
                      LinkTarget(LINK_EXTERNAL, "https://example.org/x"))
            return ops.LinkOp(doc_id, parent_ipath, target)
        # annotate
        local = [rid for rid, r in sorted(c.resources.items())
                 if r.kind == "local-file"]
        if not local:
            return ops.RenameOp(rng.choice(paths), self._fresh_name(c))
        rid = rng.choice(local)
        return ops.AnnotateOp(rid, rng.randint(0, 40), rng.randint(0, 30),
                              rng.randint(1, 30), rng.randint(1, 20),
                              rng.choice(WORDS), author="")

    def _payload_for(self, c: Collection, etype: ElementType):
        rng = self.rng
        if etype.kind == KIND_ATOMIC:
            return ops.TextPayload(" ".join(rng.sample(WORDS, 2)))
        if etype.kind == KIND_RESOURCE:
            return ops.ResourcePayload(rng.choice(sorted(c.resources)))
        if etype.kind == KIND_LINK:
            return ops.LinkPayload(
                LinkTarget(LINK_DOCUMENT, rng.choice(sorted(c.documents))))
        if etype.kind == KIND_QUIZ:
            return ops.QuizPayload(Mcq("Which?", ("a", "b"), rng.randrange(2)))
        return ops.EmptyPayload()


def instance_paths(root: ElementInstance, want) -> list[tuple]:
    """Instance paths (tuples of (name, index)) of nodes matching `want`,
    excluding the root itself."""
    found: list[tuple] = []

    def walk(inst: ElementInstance, prefix: tuple) -> None:
        counters: dict[str, int] = {}
        for child in inst.children or ():
            idx = counters.get(child.name, 0)
            counters[child.name] = idx + 1
            cpath = prefix + ((child.name, idx),)
            if want(child):
                found.append(cpath)
            walk(child, cpath)

    if want(root):
        found.append(())
    walk(root, ())
    return found


# ---------------------------------------------------------------------------
# Plain-tuple oracle

def plain(inst: ElementInstance):
    """Convert an instance tree to nested plain tuples."""
    if inst.text is not None:
        return (inst.name, ("text", inst.text))
    if inst.resource_id is not None:
        return (inst.name, ("res", inst.resource_id))
    if inst.link is not None:
        return (inst.name, ("link", inst.link.kind, inst.link.value))
    if inst.quiz is not None:
        q = inst.quiz
        return (inst.name, ("quiz", q.stem, q.choices, q.correct_index,
                            q.explanation))
    return (inst.name, ("children", tuple(plain(ch) for ch in inst.children or ())))


def o_map(node, path, fn):
    """Apply fn to every node at `path` below node; fn -> node or None (drop)."""
    if not path:
        return fn(node)
    name, payload = node
    if payload[0] != "children":
        return node
    out = []
    for child in payload[1]:
        if child[0] == path[0]:
            result = o_map(child, path[1:], fn)
            if result is not None:
                out.append(result)
        else:
            out.append(child)
    return (name, ("children", tuple(out)))


def o_gather(node, path):
    if not path:
        return [node]
    name, payload = node
    if payload[0] != "children":
        return []
    found = []
    for child in payload[1]:
        if child[0] == path[0]:
            found.extend(o_gather(child, path[1:]))
    return found


def o_extract(node, path):
    taken = []

    def take(n):
        taken.append(n)
        return None

    return o_map(node, path, take), taken


class OracleAmbiguous(Exception):
    pass


def o_create_parent(root, path):
    if not path:
        return root
    existing = o_gather(root, path)
    if len(existing) == 1:
        return root
    if len(existing) > 1:
        raise OracleAmbiguous(path)
    root = o_create_parent(root, path[:-1])
    empty = (path[-1], ("children", ()))
    return o_map(root, path[:-1],
                 lambda n: (n[0], ("children", n[1][1] + (empty,))))


def _o_insert_after_same(children, items, name):
    idxs = [i for i, ch in enumerate(children) if ch[0] == name]
    pos = idxs[-1] + 1 if idxs else len(children)
    return children[:pos] + tuple(items) + children[pos:]


def o_attach(root, parent_path, items, after_name=None):
    if not items:
        return root
    root = o_create_parent(root, parent_path)

    def put(n):
        kids = n[1][1]
        if after_name is None:
            return (n[0], ("children", kids + tuple(items)))
        return (n[0], ("children", _o_insert_after_same(kids, items, after_name)))

    return o_map(root, parent_path, put)


def o_rename(root, path, new_name):
    return o_map(root, path, lambda n: (new_name, n[1]))


def o_remove(root, path):
    return o_map(root, path, lambda n: None)


def o_move(root, path, new_parent_path):
    root, extracted = o_extract(root, path)
    return o_attach(root, new_parent_path, extracted)


def o_merge(root, source_path, target_path, final_name):
    if final_name != target_path[-1]:
        root = o_rename(root, target_path, final_name)
    root, extracted = o_extract(root, source_path)
    retyped = [(final_name, payload) for _, payload in extracted]
    return o_attach(root, target_path[:-1], retyped, after_name=final_name)


def o_group(root, parent_path, member_names, new_name):
    member_set = set(member_names)

    def regroup(n):
        kids = n[1][1]
        grouped = tuple(ch for name in member_names for ch in kids
                        if ch[0] == name)
        kept = [ch for ch in kids if ch[0] not in member_set]
        firsts = [i for i, ch in enumerate(kids) if ch[0] in member_set]
        pos = (sum(1 for ch in kids[:firsts[0]] if ch[0] not in member_set)
               if firsts else len(kept))
        kept.insert(pos, (new_name, ("children", grouped)))
        return (n[0], ("children", tuple(kept)))

    return o_map(root, parent_path, regroup)


def o_at_instance(root, ipath, fn):
    """Rewrite the node at instance path [(name, idx), ...]."""
    if not ipath:
        return fn(root)
    name, payload = root
    target_name, target_idx = ipath[0]
    seen = 0
    out = []
    for child in payload[1]:
        if child[0] == target_name:
            if seen == target_idx:
                out.append(o_at_instance(child, ipath[1:], fn))
            else:
                out.append(child)
            seen += 1
        else:
            out.append(child)
    return (name, ("children", tuple(out)))


def o_set(root, ipath, text):
    return o_at_instance(root, ipath, lambda n: (n[0], ("text", text)))


def o_doc_insert(root, parent_ipath, item):
    def put(n):
        return (n[0], ("children",
                       _o_insert_after_same(n[1][1], [item], item[0])))

    return o_at_instance(root, parent_ipath, put)


def payload_plain(c: Collection, op) -> tuple:
    """Plain payload tuple an InsertOp should create."""
    p = op.payload
    name = op.type_path[-1]
    if isinstance(p, ops.TextPayload):
        return (name, ("text", p.text))
    if isinstance(p, ops.ResourcePayload):
        return (name, ("res", p.resource_id))
    if isinstance(p, ops.LinkPayload):
        return (name, ("link", p.target.kind, p.target.value))
    if isinstance(p, ops.QuizPayload):
        q = p.quiz
        return (name, ("quiz", q.stem, q.choices, q.correct_index,
                       q.explanation))
    return (name, ("children", ()))


def expected_docs(c: Collection, op) -> dict[str, tuple] | None:
    """Predicted plain trees per document after `op`, or None when this
    oracle does not model the op (annotate: trees unchanged)."""
    pre = {doc_id: plain(doc.root) for doc_id, doc in c.documents.items()}
    if isinstance(op, ops.RenameOp):
        return {d: o_rename(t, op.path, op.new_name) for d, t in pre.items()}
    if isinstance(op, ops.RemoveOp):
        return {d: o_remove(t, op.path) for d, t in pre.items()}
    if isinstance(op, ops.MoveOp):
        if op.new_parent_path == op.path[:-1]:
            return pre  # pure schema reorder
        return {d: o_move(t, op.path, op.new_parent_path)
                for d, t in pre.items()}
    if isinstance(op, ops.MergeOp):
        target = c.schema.find(op.target_path)
        final = op.new_name if op.new_name is not None else target.name
        return {d: o_merge(t, op.source_path, op.target_path, final)
                for d, t in pre.items()}
    if isinstance(op, ops.GroupOp):
        member_names = [p[-1] for p in op.paths]
        parent_path = op.paths[0][:-1]
        return {d: o_group(t, parent_path, member_names, op.new_name)
                for d, t in pre.items()}
    if isinstance(op, ops.SetValueOp):
        pre[op.doc_id] = o_set(pre[op.doc_id], op.instance_path, op.text)
        return pre
    if isinstance(op, ops.InsertOp):
        pre[op.doc_id] = o_doc_insert(pre[op.doc_id], op.parent_instance_path,
                                      payload_plain(c, op))
        return pre
    if isinstance(op, ops.LinkOp):
        parent_epath = tuple(n for n, _ in op.parent_instance_path)
        ptype = c.schema.find(parent_epath)
        link_children = [ch for ch in ptype.children if ch.kind == KIND_LINK]
        assert len(link_children) == 1
        item = (link_children[0].name, ("link", op.target.kind, op.target.value))
        pre[op.doc_id] = o_doc_insert(pre[op.doc_id], op.parent_instance_path,
                                      item)
        return pre
    if isinstance(op, ops.AnnotateOp):
        return pre
    return None


def value_multiset(c: Collection) -> dict:
    """Multiset of leaf payloads across all documents (paths ignored)."""
    from collections import Counter

    counter: Counter = Counter()

    def walk(node) -> None:
        name, payload = node
        if payload[0] == "children":
            for child in payload[1]:
                walk(child)
        else:
            counter[payload] += 1

    for doc in c.documents.values():
        walk(plain(doc.root))
    return counter
