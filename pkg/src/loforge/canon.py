"""Canonical JSON serialization for collections.

One byte form per collection state: object keys sorted, no insignificant
whitespace, UTF-8 with a single trailing LF, resource bytes embedded as
base64. Serializing an invalid collection raises InvalidCollection;
deserialize(serialize(c)) == c for every valid c.
"""

from __future__ import annotations

import base64
import json
from typing import Any

from . import ops
from .model import (
    Annotation,
    Collection,
    Document,
    ElementInstance,
    ElementType,
    InvalidCollection,
    KIND_COMPOSITE,
    LinkTarget,
    LogRecord,
    Mcq,
    Origin,
    Resource,
    STORE_FORMAT,
    STORE_FORMAT_VERSION,
    Schema,
    validate_collection,
)


def canonical_bytes(obj: Any) -> bytes:
    """Canonical JSON encoding of a plain object tree."""
    text = json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return text.encode("utf-8") + b"\n"


# ---------------------------------------------------------------------------
# Schema

def type_to_obj(t: ElementType) -> dict:
    obj: dict[str, Any] = {"name": t.name, "kind": t.kind, "multiplicity": t.multiplicity}
    if t.kind == KIND_COMPOSITE:
        obj["children"] = [type_to_obj(ch) for ch in t.children]
    return obj


def type_from_obj(obj: dict) -> ElementType:
    children = tuple(type_from_obj(ch) for ch in obj.get("children", []))
    return ElementType(obj["name"], obj["kind"], obj["multiplicity"], children)


def schema_to_obj(s: Schema) -> dict:
    return {"version": s.version, "root": type_to_obj(s.root)}


def schema_from_obj(obj: dict) -> Schema:
    return Schema(root=type_from_obj(obj["root"]), version=obj["version"])


# ---------------------------------------------------------------------------
# Documents

def instance_to_obj(i: ElementInstance) -> dict:
    obj: dict[str, Any] = {"name": i.name}
    if i.text is not None:
        obj["text"] = i.text
    elif i.resource_id is not None:
        obj["resource"] = i.resource_id
    elif i.link is not None:
        obj["link"] = {"kind": i.link.kind, "value": i.link.value}
    elif i.quiz is not None:
        obj["quiz"] = {"stem": i.quiz.stem, "choices": list(i.quiz.choices),
                       "correct_index": i.quiz.correct_index,
                       "explanation": i.quiz.explanation}
    else:
        obj["children"] = [instance_to_obj(ch) for ch in (i.children or ())]
    return obj


def instance_from_obj(obj: dict) -> ElementInstance:
    name = obj["name"]
    if "text" in obj:
        return ElementInstance.atomic(name, obj["text"])
    if "resource" in obj:
        return ElementInstance.resource(name, obj["resource"])
    if "link" in obj:
        return ElementInstance.of_link(name, LinkTarget(obj["link"]["kind"], obj["link"]["value"]))
    if "quiz" in obj:
        q = obj["quiz"]
        return ElementInstance.of_quiz(name, Mcq(q["stem"], tuple(q["choices"]),
                                                 q["correct_index"], q.get("explanation", "")))
    return ElementInstance.composite(name, tuple(instance_from_obj(ch)
                                                 for ch in obj.get("children", [])))


def document_to_obj(d: Document) -> dict:
    return {"id": d.id,
            "origin": {"plugin": d.origin.plugin, "locator": d.origin.locator},
            "root": instance_to_obj(d.root)}


def document_from_obj(obj: dict) -> Document:
    return Document(id=obj["id"],
                    root=instance_from_obj(obj["root"]),
                    origin=Origin(obj["origin"]["plugin"], obj["origin"]["locator"]))


# ---------------------------------------------------------------------------
# Resources / annotations / log

def resource_to_obj(r: Resource, data: bytes | None = None) -> dict:
    obj: dict[str, Any] = {"id": r.id, "kind": r.kind, "media_type": r.media_type,
                           "locator": r.locator, "byte_size": r.byte_size}
    if data is not None:
        obj["data"] = base64.b64encode(data).decode("ascii")
    return obj


def resource_from_obj(obj: dict) -> tuple[Resource, bytes | None]:
    res = Resource(id=obj["id"], kind=obj["kind"], media_type=obj["media_type"],
                   locator=obj["locator"], byte_size=obj["byte_size"])
    data = base64.b64decode(obj["data"]) if "data" in obj else None
    return res, data


def annotation_to_obj(a: Annotation) -> dict:
    return {"id": a.id, "resource_id": a.resource_id,
            "x": a.x, "y": a.y, "w": a.w, "h": a.h,
            "comment": a.comment, "author": a.author}


def annotation_from_obj(obj: dict) -> Annotation:
    return Annotation(id=obj["id"], resource_id=obj["resource_id"],
                      x=obj["x"], y=obj["y"], w=obj["w"], h=obj["h"],
                      comment=obj["comment"], author=obj.get("author", ""))


def log_record_to_obj(rec: LogRecord) -> dict:
    return {"pre_version": rec.pre_version, "post_version": rec.post_version,
            "entry": ops.entry_to_obj(rec.entry)}


def log_record_from_obj(obj: dict) -> LogRecord:
    return LogRecord(pre_version=obj["pre_version"], post_version=obj["post_version"],
                     entry=ops.entry_from_obj(obj["entry"]))


# ---------------------------------------------------------------------------
# Whole collections

def collection_to_obj(c: Collection, include_data: bool = True) -> dict:
    return {
        "meta": {"format": STORE_FORMAT, "format_version": STORE_FORMAT_VERSION},
        "schema": schema_to_obj(c.schema),
        "documents": {doc_id: document_to_obj(d) for doc_id, d in c.documents.items()},
        "resources": {
            rid: resource_to_obj(r, c.resource_bytes.get(rid) if include_data else None)
            for rid, r in c.resources.items()
        },
        "annotations": {aid: annotation_to_obj(a) for aid, a in c.annotations.items()},
        "log": [log_record_to_obj(rec) for rec in c.log],
    }


def collection_from_obj(obj: dict) -> Collection:
    resources = {}
    blobs = {}
    for rid, robj in obj.get("resources", {}).items():
        res, data = resource_from_obj(robj)
        resources[rid] = res
        if data is not None:
            blobs[rid] = data
    return Collection(
        schema=schema_from_obj(obj["schema"]),
        documents={doc_id: document_from_obj(d)
                   for doc_id, d in obj.get("documents", {}).items()},
        resources=resources,
        resource_bytes=blobs,
        annotations={aid: annotation_from_obj(a)
                     for aid, a in obj.get("annotations", {}).items()},
        log=tuple(log_record_from_obj(rec) for rec in obj.get("log", [])),
    )


def canonical_serialize(c: Collection) -> bytes:
    """One canonical byte string per collection state; refuses invalid input."""
    report = validate_collection(c)
    if not report.ok:
        raise InvalidCollection(report)
    return canonical_bytes(collection_to_obj(c))


def deserialize_collection(data: bytes) -> Collection:
    return collection_from_obj(json.loads(data.decode("utf-8")))
