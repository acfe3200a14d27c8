"""Import engine: plugins produce raw records, the engine folds them into
the collection (schema re-inferred over old + new content), dedupes
resources, logs one import event, and hands back a report."""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, replace
from typing import Callable

from ..model import (
    Annotation,
    Collection,
    LINK_ANNOTATION,
    LINK_DOCUMENT,
    annotation_id,
    validate_collection,
)
from ..ops import ImportEvent, bump
from .records import (
    ImportError_,
    RawLink,
    RawRecord,
    ResourceSink,
    build_document,
    document_to_record,
    infer_schema,
)

__all__ = [
    "ImportError_",
    "ImportReport",
    "PluginResult",
    "available_plugins",
    "register_plugin",
    "run_import",
]


@dataclass(frozen=True)
class PluginResult:
    """What one plugin run produced."""

    records: tuple[RawRecord, ...]
    linked_records: tuple[RawRecord, ...] = ()
    annotations: tuple[tuple[str, int, int, int, int, str, str], ...] = ()
    skipped: int = 0
    errors: tuple[str, ...] = ()


@dataclass(frozen=True)
class ImportReport:
    plugin: str
    documents: int
    linked_documents: int
    resources: int
    skipped: int
    errors: tuple[str, ...]
    elapsed_s: float


Plugin = Callable[[dict[str, str]], PluginResult]

_PLUGINS: dict[str, Plugin] = {}
_builtins_loaded = False


def register_plugin(name: str, fn: Plugin) -> None:
    _PLUGINS[name] = fn


def available_plugins() -> list[str]:
    _load_builtins()
    return sorted(_PLUGINS)


def _load_builtins() -> None:
    global _builtins_loaded
    if _builtins_loaded:
        return
    _builtins_loaded = True
    from . import files, medpix, package  # noqa: F401  (self-registering)


_DOC_ID = re.compile(r"[^/\x00-\x1f\\]+")


def _prune_links(value, docs: set[str], anns: set[str]):
    """Drop links whose targets are outside this import's reach.

    Returns (pruned value, dropped count); the value is None when the node
    vanished. Composites emptied by the pruning vanish with it, so the
    inferred schema never ends up with childless composite types.
    """
    if isinstance(value, RawLink):
        if value.kind == LINK_DOCUMENT and value.value not in docs:
            return None, 1
        if value.kind == LINK_ANNOTATION and value.value not in anns:
            return None, 1
        return value, 0
    if isinstance(value, dict):
        out: dict = {}
        dropped = 0
        for key, v in value.items():
            nv, d = _prune_links(v, docs, anns)
            dropped += d
            if nv is None or nv == {} or nv == []:
                continue
            out[key] = nv
        return out, dropped
    if isinstance(value, list):
        out_l: list = []
        dropped = 0
        for v in value:
            nv, d = _prune_links(v, docs, anns)
            dropped += d
            if nv is None or nv == {}:
                continue
            out_l.append(nv)
        return out_l, dropped
    return value, 0


def run_import(c: Collection, plugin: str, params: dict[str, str]) -> tuple[Collection, ImportReport]:
    """Run one import; on success returns the grown collection + report.

    The schema is re-inferred over existing documents plus the new records,
    so multiplicities only ever widen. Any shape conflict (same path, two
    kinds) aborts the import with the input collection unchanged.
    """
    _load_builtins()
    fn = _PLUGINS.get(plugin)
    if fn is None:
        raise ImportError_(f"unknown import plugin {plugin!r}; "
                           f"available: {', '.join(available_plugins())}")
    started = time.monotonic()
    result = fn(dict(params))
    errors = list(result.errors)
    skipped = result.skipped

    existing = [document_to_record(doc) for _, doc in sorted(c.documents.items())]
    root_name = c.schema.root.name
    incoming: list[tuple[RawRecord, bool]] = (
        [(r, True) for r in result.records] + [(r, False) for r in result.linked_records])

    kept: list[tuple[RawRecord, bool]] = []
    seen_ids = set(c.documents)
    for rec, primary in incoming:
        if not rec.source_id or not _DOC_ID.fullmatch(rec.source_id) \
                or rec.source_id.startswith("."):
            errors.append(f"bad document id {rec.source_id!r}")
            skipped += 1
            continue
        if rec.source_id in seen_ids:
            errors.append(f"duplicate document id {rec.source_id!r}")
            skipped += 1
            continue
        seen_ids.add(rec.source_id)
        kept.append((rec, primary))
    if not kept and not existing:
        raise ImportError_("import produced no documents"
                           + (f" ({errors[0]})" if errors else ""))

    # links must resolve inside the grown collection; a partial import (say
    # max_cases) may pull in records whose cross-references point outside it
    universe_docs = set(c.documents) | {rec.source_id for rec, _ in kept}
    universe_anns = set(c.annotations) | {
        annotation_id(rid, x, y, w, h, comment)
        for rid, x, y, w, h, comment, _author in result.annotations}
    pruned: list[tuple[RawRecord, bool]] = []
    dropped_links = 0
    for rec, primary in kept:
        tree, dropped = _prune_links(rec.tree, universe_docs, universe_anns)
        dropped_links += dropped
        if not tree:
            errors.append(f"document {rec.source_id!r} had no content left "
                          "after dropping unresolvable links")
            skipped += 1
            continue
        pruned.append((replace(rec, tree=tree) if dropped else rec, primary))
    kept = pruned
    if dropped_links:
        skipped += dropped_links
        errors.append(f"dropped {dropped_links} links to targets outside "
                      "this import")
    if not kept and not existing:
        raise ImportError_("import produced no documents"
                           + (f" ({errors[0]})" if errors else ""))

    schema = infer_schema(existing + [rec for rec, _ in kept], root_name)
    sink = ResourceSink(c.resources, c.resource_bytes)
    documents = dict(c.documents)
    n_primary = n_linked = 0
    for rec, primary in kept:
        doc = build_document(rec, root_name, plugin, sink)
        documents[doc.id] = doc
        if primary:
            n_primary += 1
        else:
            n_linked += 1

    annotations = dict(c.annotations)
    for rid, x, y, w, h, comment, author in result.annotations:
        if rid not in sink.resources:
            errors.append(f"annotation on unknown resource {rid!r}")
            skipped += 1
            continue
        ann = Annotation.make(rid, x, y, w, h, comment, author)
        annotations.setdefault(ann.id, ann)

    grown = replace(
        c,
        schema=replace(schema, version=c.version),
        documents=documents,
        resources=sink.resources,
        resource_bytes=sink.blobs,
        annotations=annotations,
    )
    event = ImportEvent(
        plugin=plugin,
        params=tuple(sorted(params.items())),
        counts=(
            ("documents", n_primary),
            ("linked_documents", n_linked),
            ("resources", sink.added),
            ("skipped", skipped),
        ),
    )
    grown = bump(grown, event)
    report_v = validate_collection(grown)
    if not report_v.ok:
        raise ImportError_(f"import would produce an invalid collection:\n{report_v}")
    report = ImportReport(
        plugin=plugin,
        documents=n_primary,
        linked_documents=n_linked,
        resources=sink.added,
        skipped=skipped,
        errors=tuple(errors),
        elapsed_s=time.monotonic() - started,
    )
    return grown, report
