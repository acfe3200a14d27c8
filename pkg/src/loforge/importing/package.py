"""Re-import documents from a previously exported content package.

Exported archives carry machine-readable sidecars next to the rendered
pages: ``data/docs/<docid>.json`` (one filtered document each) and
``data/collection.json`` (resource + annotation records). This importer
rebuilds records from those sidecars, pulling local resource bytes out of
the archive itself. Links whose targets were not part of the package are
dropped and counted as skipped.

Params: path (required) - the package zip.
"""

from __future__ import annotations

import json
import zipfile
from pathlib import Path

from .. import canon
from ..model import (
    ElementInstance,
    LINK_ANNOTATION,
    LINK_DOCUMENT,
    RES_LOCAL,
)
from . import PluginResult, register_plugin
from .records import ImportError_, RawLink, RawQuiz, RawRecord, RawResource


def _instance_to_raw(inst: ElementInstance, ctx: "_PackageContext"):
    if inst.text is not None:
        return inst.text
    if inst.resource_id is not None:
        return ctx.resource(inst.resource_id)
    if inst.link is not None:
        if not ctx.link_resolves(inst.link.kind, inst.link.value):
            ctx.dropped_links += 1
            return None
        return RawLink(inst.link.kind, inst.link.value)
    if inst.quiz is not None:
        return RawQuiz(inst.quiz)
    tree: dict = {}
    for child in inst.children or ():
        value = _instance_to_raw(child, ctx)
        if value is None or value == {}:
            continue
        if child.name in tree:
            existing = tree[child.name]
            if isinstance(existing, list):
                existing.append(value)
            else:
                tree[child.name] = [existing, value]
        else:
            tree[child.name] = value
    return tree


class _PackageContext:
    def __init__(self, zf: zipfile.ZipFile, resources: dict, annotations: dict,
                 doc_ids: set[str]):
        self.zf = zf
        self.resources = resources
        self.annotations = annotations
        self.doc_ids = doc_ids
        self.dropped_links = 0
        self._cache: dict[str, RawResource] = {}

    def resource(self, rid: str) -> RawResource:
        cached = self._cache.get(rid)
        if cached is not None:
            return cached
        record = self.resources.get(rid)
        if record is None:
            raise ImportError_(f"package references unknown resource {rid}")
        res, _ = canon.resource_from_obj(record)
        if res.kind == RES_LOCAL:
            try:
                data = self.zf.read(res.locator)
            except KeyError:
                raise ImportError_(
                    f"package is missing resource file {res.locator}") from None
            raw = RawResource(data=data, media_type=res.media_type,
                              name_hint=res.locator.rsplit("/", 1)[-1])
        else:
            raw = RawResource(url=res.locator, media_type=res.media_type)
        self._cache[rid] = raw
        return raw

    def link_resolves(self, kind: str, value: str) -> bool:
        if kind == LINK_DOCUMENT:
            return value in self.doc_ids
        if kind == LINK_ANNOTATION:
            return value in self.annotations
        return True  # external URLs always survive


def import_package(params: dict[str, str]) -> PluginResult:
    path = params.get("path")
    if not path:
        raise ImportError_("imscp importer needs a path=<package.zip> parameter")
    if not Path(path).is_file():
        raise ImportError_(f"{path} is not a file")
    try:
        zf = zipfile.ZipFile(path)
    except zipfile.BadZipFile as e:
        raise ImportError_(f"{path} is not a zip archive: {e}") from e
    with zf:
        names = set(zf.namelist())
        if "imsmanifest.xml" not in names:
            raise ImportError_(f"{path} has no imsmanifest.xml")
        if "data/collection.json" not in names:
            raise ImportError_(f"{path} has no data/collection.json sidecar "
                               "(not produced by this tool?)")
        sidecar = json.loads(zf.read("data/collection.json").decode("utf-8"))
        doc_names = sorted(n for n in names
                           if n.startswith("data/docs/") and n.endswith(".json"))
        doc_ids = {n[len("data/docs/"):-len(".json")] for n in doc_names}
        ctx = _PackageContext(zf, sidecar.get("resources", {}),
                              sidecar.get("annotations", {}), doc_ids)
        records = []
        errors = []
        empty_docs = 0
        for name in doc_names:
            doc = canon.document_from_obj(json.loads(zf.read(name).decode("utf-8")))
            tree = _instance_to_raw(doc.root, ctx)
            if not isinstance(tree, dict):
                raise ImportError_(f"document {doc.id} in {path} has a "
                                   "non-composite root")
            if not tree:
                errors.append(f"document {doc.id} had no content left after "
                              "dropping unresolved links")
                empty_docs += 1
                continue
            records.append(RawRecord(source_id=doc.id, tree=tree,
                                     locator=f"{path}#{doc.id}"))
        annotations = []
        for aid in sorted(ctx.annotations):
            a = canon.annotation_from_obj(ctx.annotations[aid])
            annotations.append((a.resource_id, a.x, a.y, a.w, a.h,
                                a.comment, a.author))
    return PluginResult(records=tuple(records),
                        annotations=tuple(annotations),
                        skipped=ctx.dropped_links + empty_docs,
                        errors=tuple(errors))


register_plugin("imscp", import_package)
