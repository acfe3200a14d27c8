"""Package assembly: manifest, pages, sidecars, deterministic zip.

An exported archive holds the rendered pages plus machine-readable
sidecars (``data/docs/<docid>.json`` and ``data/collection.json``) so the
package can be re-imported losslessly. All entry names, XML element
order, and zip metadata are derived from sorted collection state, and a
fixed epoch stamps every member, so the same collection and profile
always produce the same bytes.
"""

from __future__ import annotations

import io
import time
import zipfile
from dataclasses import replace
from pathlib import Path
from xml.etree import ElementTree as ET

from .. import canon
from ..model import (
    Collection,
    Document,
    ElementInstance,
    InvalidCollection,
    ModelError,
    RES_LOCAL,
    validate_collection,
)
from ..paths import ElementPath
from .profile import (
    ExportProfile,
    FORMAT_SCORM12,
    selection_sets,
    validate_profile,
)
from .render import (
    STYLE_CSS,
    _quiz_instances,
    document_title,
    render_document_html,
    render_quiz_page,
    render_quiz_runtime,
)

# Zip timestamps can't predate 1980-01-01; clamp older epochs to it.
_ZIP_EPOCH_FLOOR = 315532800


class ExportError(ModelError):
    pass


# ---------------------------------------------------------------------------
# Document filtering

def _filter_instance(inst: ElementInstance, path: ElementPath,
                     keep: frozenset[ElementPath]) -> ElementInstance | None:
    if path and path not in keep:
        return None
    is_leaf = (inst.text is not None or inst.resource_id is not None
               or inst.link is not None or inst.quiz is not None)
    if is_leaf:
        return inst
    kept = []
    for child in inst.children or ():
        filtered = _filter_instance(child, path + (child.name,), keep)
        if filtered is not None:
            kept.append(filtered)
    if path and not kept:
        return None  # an emptied composite would corrupt re-import inference
    return replace(inst, children=tuple(kept))


def filter_document(c: Collection, doc: Document,
                    profile: ExportProfile) -> Document | None:
    """Prune a document to the profile's selection.

    Returns None when nothing at all survives (such documents are left
    out of the package entirely).
    """
    rendered, containers = selection_sets(c, profile)
    root = _filter_instance(doc.root, (), rendered | containers)
    if root is None or not root.children:
        return None
    return replace(doc, root=root)


def _referenced_resources(docs: list[Document]) -> list[str]:
    seen: set[str] = set()

    def walk(inst: ElementInstance) -> None:
        if inst.resource_id is not None:
            seen.add(inst.resource_id)
        for child in inst.children or ():
            walk(child)

    for doc in docs:
        walk(doc.root)
    return sorted(seen)


# ---------------------------------------------------------------------------
# Manifest

_IMSCP_MANIFEST_ATTRS = {
    "identifier": "MANIFEST-1",
    "version": "1.1",
    "xmlns": "http://www.imsglobal.org/xsd/imscp_v1p1",
    "xmlns:xsi": "http://www.w3.org/2001/XMLSchema-instance",
    "xsi:schemaLocation":
        "http://www.imsglobal.org/xsd/imscp_v1p1 imscp_v1p1.xsd",
}

_SCORM_MANIFEST_ATTRS = {
    "identifier": "MANIFEST-1",
    "version": "1.1",
    "xmlns": "http://www.imsproject.org/xsd/imscp_rootv1p1p2",
    "xmlns:adlcp": "http://www.adlnet.org/xsd/adlcp_rootv1p2",
    "xmlns:xsi": "http://www.w3.org/2001/XMLSchema-instance",
    "xsi:schemaLocation":
        "http://www.imsproject.org/xsd/imscp_rootv1p1p2 imscp_rootv1p1p2.xsd "
        "http://www.adlnet.org/xsd/adlcp_rootv1p2 adlcp_rootv1p2.xsd",
}


def _build_manifest(profile: ExportProfile, doc_ids: list[str],
                    titles: dict[str, str], quiz_doc_ids: set[str],
                    doc_files: dict[str, list[str]],
                    common_files: list[str]) -> bytes:
    scorm = profile.format == FORMAT_SCORM12
    manifest = ET.Element(
        "manifest", _SCORM_MANIFEST_ATTRS if scorm else _IMSCP_MANIFEST_ATTRS)
    metadata = ET.SubElement(manifest, "metadata")
    ET.SubElement(metadata, "schema").text = (
        "ADL SCORM" if scorm else "IMS Content")
    ET.SubElement(metadata, "schemaversion").text = "1.2" if scorm else "1.1.3"
    organizations = ET.SubElement(manifest, "organizations",
                                  {"default": "ORG-1"})
    organization = ET.SubElement(organizations, "organization",
                                 {"identifier": "ORG-1"})
    ET.SubElement(organization, "title").text = profile.title
    for doc_id in doc_ids:
        item = ET.SubElement(organization, "item", {
            "identifier": f"ITEM-{doc_id}",
            "identifierref": f"RES-{doc_id}",
        })
        ET.SubElement(item, "title").text = titles[doc_id]
        if scorm and doc_id in quiz_doc_ids:
            quiz_item = ET.SubElement(item, "item", {
                "identifier": f"ITEM-{doc_id}-quiz",
                "identifierref": f"RES-{doc_id}-quiz",
            })
            ET.SubElement(quiz_item, "title").text = (
                f"{titles[doc_id]} (self-assessment)")
    resources = ET.SubElement(manifest, "resources")
    for doc_id in doc_ids:
        attrs = {"identifier": f"RES-{doc_id}", "type": "webcontent"}
        if scorm:
            attrs["adlcp:scormtype"] = "asset"
        attrs["href"] = f"{doc_id}.html"
        resource = ET.SubElement(resources, "resource", attrs)
        for href in doc_files[doc_id]:
            ET.SubElement(resource, "file", {"href": href})
        ET.SubElement(resource, "dependency", {"identifierref": "RES-COMMON"})
        if scorm and doc_id in quiz_doc_ids:
            quiz_attrs = {
                "identifier": f"RES-{doc_id}-quiz",
                "type": "webcontent",
                "adlcp:scormtype": "sco",
                "href": f"{doc_id}_quiz.html",
            }
            quiz_res = ET.SubElement(resources, "resource", quiz_attrs)
            ET.SubElement(quiz_res, "file", {"href": f"{doc_id}_quiz.html"})
            ET.SubElement(quiz_res, "file", {"href": f"{doc_id}_quiz.js"})
            ET.SubElement(quiz_res, "dependency",
                          {"identifierref": "RES-COMMON"})
    common = ET.SubElement(resources, "resource",
                           {"identifier": "RES-COMMON", "type": "webcontent"})
    for href in common_files:
        ET.SubElement(common, "file", {"href": href})
    ET.indent(manifest, space="  ")
    xml = ET.tostring(manifest, encoding="unicode")
    return f'<?xml version="1.0" encoding="UTF-8"?>\n{xml}\n'.encode("utf-8")


# ---------------------------------------------------------------------------
# Package assembly

def build_package(c: Collection, profile: ExportProfile) -> dict[str, bytes]:
    """All archive entries (path -> bytes) for this collection + profile."""
    report = validate_collection(c)
    if not report.ok:
        raise InvalidCollection(report)
    problems = validate_profile(c, profile)
    if problems:
        raise ExportError("; ".join(problems))

    wanted = (sorted(c.documents) if profile.document_filter is None
              else sorted(set(profile.document_filter)))
    filtered: dict[str, Document] = {}
    for doc_id in wanted:
        kept = filter_document(c, c.documents[doc_id], profile)
        if kept is not None:
            filtered[doc_id] = kept
    if not filtered:
        raise ExportError("selection leaves nothing to export")
    doc_ids = sorted(filtered)
    exported = frozenset(doc_ids)

    rendered, _ = selection_sets(c, profile)
    scorm = profile.format == FORMAT_SCORM12
    titles: dict[str, str] = {}
    quiz_doc_ids: set[str] = set()
    doc_files: dict[str, list[str]] = {}
    files: dict[str, bytes] = {}

    for doc_id in doc_ids:
        doc = c.documents[doc_id]
        titles[doc_id] = document_title(c, doc, rendered)
        questions = _quiz_instances(filtered[doc_id]) if profile.include_quizzes else []
        quiz_href = f"{doc_id}_quiz.html" if scorm and questions else None
        page, _assets = render_document_html(
            c, doc_id, profile, exported_doc_ids=exported, quiz_href=quiz_href)
        files[f"{doc_id}.html"] = page.encode("utf-8")
        sidecar = canon.canonical_bytes(canon.document_to_obj(filtered[doc_id]))
        files[f"data/docs/{doc_id}.json"] = sidecar
        doc_files[doc_id] = [f"{doc_id}.html", f"data/docs/{doc_id}.json"]
        if quiz_href:
            quiz_doc_ids.add(doc_id)
            files[f"{doc_id}_quiz.html"] = render_quiz_page(
                c, doc_id, titles[doc_id], questions,
                f"{doc_id}_quiz.js").encode("utf-8")
            files[f"{doc_id}_quiz.js"] = render_quiz_runtime(
                questions).encode("utf-8")

    resource_ids = _referenced_resources(list(filtered.values()))
    resource_records = {}
    for rid in resource_ids:
        res = c.resources[rid]
        resource_records[rid] = canon.resource_to_obj(res)
        if res.kind == RES_LOCAL:
            files[res.locator] = c.resource_bytes[rid]
    annotation_records = {
        aid: canon.annotation_to_obj(a)
        for aid, a in c.annotations.items()
        if a.resource_id in set(resource_ids)
    }
    files["data/collection.json"] = canon.canonical_bytes({
        "resources": resource_records,
        "annotations": annotation_records,
    })
    files["style.css"] = STYLE_CSS.encode("utf-8")

    common_files = ["style.css", "data/collection.json"]
    common_files += [c.resources[rid].locator for rid in resource_ids
                     if c.resources[rid].kind == RES_LOCAL]
    files["imsmanifest.xml"] = _build_manifest(
        profile, doc_ids, titles, quiz_doc_ids, doc_files, common_files)
    return files


def _zip_bytes(files: dict[str, bytes], epoch: int | None) -> bytes:
    stamp = int(time.time()) if epoch is None else int(epoch)
    date_time = time.gmtime(max(stamp, _ZIP_EPOCH_FLOOR))[:6]
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_STORED) as zf:
        for name in sorted(files):
            info = zipfile.ZipInfo(name, date_time=date_time)
            info.external_attr = 0o644 << 16
            zf.writestr(info, files[name])
    return buf.getvalue()


def export_package(c: Collection, profile: ExportProfile,
                   out_path: str | Path | None = None) -> bytes:
    """Build the archive; optionally write it to out_path. Returns bytes."""
    data = _zip_bytes(build_package(c, profile), profile.fixed_epoch)
    if out_path is not None:
        Path(out_path).write_bytes(data)
    return data
