"""HTTP facade over collection stores.

One writer at a time per collection: every mutation runs under that
collection's lock against the current immutable snapshot, saves the
store, then publishes the new snapshot. Reads never block on writes.
Mutating endpoints honor an ``If-Match: <version>`` header and answer
409 (version unchanged) when it is stale; schema ops and document
patches require it. Domain failures answer 422 with the rule id.
Exports run as background jobs off a snapshot and are polled.
"""

from __future__ import annotations

import tempfile
import threading
import uuid
from dataclasses import asdict
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse

from . import canon, dsl, ops
from .exporting import (
    ExportError,
    ExportProfile,
    export_package,
    validate_package,
    validate_profile,
)
from .importing import run_import
from .importing.records import ImportError_
from .model import (
    Collection,
    InvalidCollection,
    annotation_id,
    validate_collection,
)
from .paths import PathError, parse_path
from .store import StoreError, load_collection, save_collection

MAX_PAGE_SIZE = 200


def _error(status: int, rule: str, message: str, **extra) -> JSONResponse:
    return JSONResponse({"error": rule, "message": message, **extra},
                        status_code=status)


def _not_found(what: str, value: str) -> JSONResponse:
    return _error(404, f"unknown-{what}", f"no such {what}: {value}")


class CollectionEntry:
    """One stored collection: id, disk path, snapshot, writer lock."""

    def __init__(self, cid: str, path: Path, snapshot: Collection):
        self.id = cid
        self.path = path
        self.snapshot = snapshot
        self.lock = threading.Lock()


class ExportJob:
    def __init__(self, jid: str, profile_obj: dict, artifact: Path):
        self.id = jid
        self.profile_obj = profile_obj
        self.artifact = artifact
        self.state = "queued"
        self.error: str | None = None
        self.bytes = 0

    def as_obj(self) -> dict:
        obj = {"job": self.id, "state": self.state, "profile": self.profile_obj}
        if self.error is not None:
            obj["error"] = self.error
        if self.state == "done":
            obj["bytes"] = self.bytes
        return obj


class Registry:
    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._entries: dict[str, CollectionEntry] = {}
        self._jobs: dict[tuple[str, str], ExportJob] = {}
        for store in sorted(self.root.glob("*.clv")):
            cid = store.name[: -len(".clv")]
            try:
                self._entries[cid] = CollectionEntry(
                    cid, store, load_collection(store))
            except (StoreError, OSError):
                continue  # skip unreadable stores; they stay on disk untouched

    def ids(self) -> list[str]:
        with self._lock:
            return sorted(self._entries)

    def get(self, cid: str) -> CollectionEntry | None:
        with self._lock:
            return self._entries.get(cid)

    def create(self, c: Collection) -> CollectionEntry:
        with self._lock:
            while True:
                cid = uuid.uuid4().hex[:12]
                if cid not in self._entries:
                    break
            path = self.root / f"{cid}.clv"
            save_collection(c, path)
            entry = CollectionEntry(cid, path, c)
            self._entries[cid] = entry
            return entry

    def add_job(self, cid: str, job: ExportJob) -> None:
        with self._lock:
            self._jobs[(cid, job.id)] = job

    def job(self, cid: str, jid: str) -> ExportJob | None:
        with self._lock:
            return self._jobs.get((cid, jid))


def _commit(entry: CollectionEntry, c: Collection) -> None:
    save_collection(c, entry.path)
    entry.snapshot = c


def _stale(request: Request, version: int,
           required: bool = False) -> JSONResponse | None:
    header = request.headers.get("if-match")
    if header is None:
        if required:
            return _error(428, "missing-if-match",
                          "this endpoint requires an If-Match: <version> header")
        return None
    if header.strip().strip('"') != str(version):
        return _error(409, "version-conflict",
                      f"expected version {header.strip()}, "
                      f"store is at {version}", version=version)
    return None


def _doc_summary(c: Collection, doc_id: str) -> dict:
    from .exporting.render import document_title
    all_paths = frozenset(c.schema.paths())
    return {"id": doc_id,
            "title": document_title(c, c.documents[doc_id], all_paths)}


def _profile_from_obj(obj: dict) -> ExportProfile:
    def paths_of(key: str) -> tuple:
        return tuple(parse_path(p) for p in obj.get(key) or ())

    doc_filter = obj.get("document_filter")
    return ExportProfile(
        format=obj.get("format", "imscp"),
        selection=paths_of("selection"),
        summary_paths=paths_of("summary_paths"),
        document_filter=tuple(doc_filter) if doc_filter is not None else None,
        detail=obj.get("detail", "full"),
        include_quizzes=bool(obj.get("include_quizzes", False)),
        fixed_epoch=obj.get("fixed_epoch"),
        title=obj.get("title", "Curated collection"),
    )


def create_app(storage_root: Path | str,
               ui_dir: Path | str | None = None,
               fixture_base: str | None = None) -> FastAPI:
    registry = Registry(Path(storage_root))
    app = FastAPI(title="collection curation service", docs_url=None,
                  redoc_url=None)
    app.state.registry = registry

    if fixture_base and not registry.ids():
        c, _report = run_import(Collection.empty(), "medpix",
                                {"base": fixture_base})
        registry.create(c)

    # ------------------------------------------------------------------
    # collections

    @app.get("/collections")
    def list_collections() -> dict:
        out = []
        for cid in registry.ids():
            entry = registry.get(cid)
            if entry is None:
                continue
            snap = entry.snapshot
            out.append({"id": cid, "version": snap.version,
                        "documents": len(snap.documents),
                        "resources": len(snap.resources)})
        return {"collections": out}

    @app.post("/collections", status_code=201)
    async def create_collection(request: Request, root: str = "collection"):
        body = await request.body()
        if body:
            try:
                with tempfile.NamedTemporaryFile(suffix=".clv.zip") as tmp:
                    tmp.write(body)
                    tmp.flush()
                    c = load_collection(tmp.name)
            except StoreError as e:
                return _error(422, "bad-store", str(e))
        else:
            try:
                c = Collection.empty(root)
            except Exception as e:  # bad root name
                return _error(422, "bad-root-name", str(e))
        entry = registry.create(c)
        return {"id": entry.id, "version": entry.snapshot.version}

    @app.get("/collections/{cid}")
    def collection_info(cid: str):
        entry = registry.get(cid)
        if entry is None:
            return _not_found("collection", cid)
        snap = entry.snapshot
        return {"id": cid, "version": snap.version,
                "documents": len(snap.documents),
                "resources": len(snap.resources),
                "annotations": len(snap.annotations),
                "element_types": snap.schema.type_count(),
                "log_records": len(snap.log)}

    # ------------------------------------------------------------------
    # import

    @app.post("/collections/{cid}/import")
    async def import_into(cid: str, request: Request):
        entry = registry.get(cid)
        if entry is None:
            return _not_found("collection", cid)
        body = await request.json()
        plugin = body.get("plugin")
        params = body.get("params") or {}
        if not isinstance(plugin, str) or not isinstance(params, dict):
            return _error(422, "bad-request",
                          "body must be {plugin: string, params: object}")
        with entry.lock:
            stale = _stale(request, entry.snapshot.version)
            if stale is not None:
                return stale
            try:
                c, report = run_import(entry.snapshot, plugin,
                                       {k: str(v) for k, v in params.items()})
            except (ImportError_, InvalidCollection) as e:
                return _error(422, "import-failed", str(e))
            _commit(entry, c)
        return {"version": c.version, "plugin": report.plugin,
                "documents": report.documents,
                "linked_documents": report.linked_documents,
                "resources": report.resources, "skipped": report.skipped,
                "errors": list(report.errors),
                "elapsed_s": round(report.elapsed_s, 3)}

    # ------------------------------------------------------------------
    # schema + ops

    @app.get("/collections/{cid}/schema")
    def get_schema(cid: str):
        entry = registry.get(cid)
        if entry is None:
            return _not_found("collection", cid)
        snap = entry.snapshot
        return {"version": snap.version,
                "element_types": snap.schema.type_count(),
                "schema": canon.schema_to_obj(snap.schema)}

    @app.post("/collections/{cid}/schema/ops")
    async def post_schema_ops(cid: str, request: Request):
        entry = registry.get(cid)
        if entry is None:
            return _not_found("collection", cid)
        content_type = request.headers.get("content-type", "")
        try:
            if content_type.startswith("text/"):
                text = (await request.body()).decode("utf-8")
                script = dsl.parse_script(text)
                op_list = list(script.ops)
            else:
                body = await request.json()
                if "script" in body:
                    script = dsl.parse_script(body["script"])
                    op_list = list(script.ops)
                elif "ops" in body:
                    op_list = [ops.entry_from_obj(o) for o in body["ops"]]
                else:
                    return _error(422, "bad-request",
                                  'body must carry "script" (DSL text) or '
                                  '"ops" (encoded op list)')
        except dsl.DslError as e:
            return _error(422, "dsl-error", str(e))
        except (PathError, KeyError, TypeError, ValueError) as e:
            return _error(422, "bad-op", f"undecodable op: {e}")
        with entry.lock:
            stale = _stale(request, entry.snapshot.version, required=True)
            if stale is not None:
                return stale
            result = ops.apply_script(entry.snapshot, tuple(op_list))
            outcomes = [{"index": o.index, "op": dsl.print_op(o.op),
                         "ok": o.ok, "error": o.error}
                        for o in result.outcomes]
            if not result.ok:
                failed = next(o for o in result.outcomes if not o.ok)
                return _error(422, "op-failed", failed.error or "op failed",
                              op_index=failed.index, outcomes=outcomes,
                              version=entry.snapshot.version)
            _commit(entry, result.collection)
            return {"version": result.collection.version,
                    "applied": len(outcomes), "outcomes": outcomes}

    # ------------------------------------------------------------------
    # documents

    @app.get("/collections/{cid}/documents")
    def list_documents(cid: str, page: int = 1, page_size: int = 50):
        entry = registry.get(cid)
        if entry is None:
            return _not_found("collection", cid)
        snap = entry.snapshot
        page_size = max(1, min(page_size, MAX_PAGE_SIZE))
        ids = sorted(snap.documents)
        pages = max(1, -(-len(ids) // page_size))
        page = max(1, min(page, pages))
        window = ids[(page - 1) * page_size: page * page_size]
        return {"version": snap.version, "total": len(ids),
                "page": page, "pages": pages,
                "documents": [_doc_summary(snap, d) for d in window]}

    @app.get("/collections/{cid}/documents/{doc_id}")
    def get_document(cid: str, doc_id: str):
        entry = registry.get(cid)
        if entry is None:
            return _not_found("collection", cid)
        snap = entry.snapshot
        doc = snap.documents.get(doc_id)
        if doc is None:
            return _not_found("document", doc_id)
        return {"version": snap.version,
                "document": canon.document_to_obj(doc)}

    @app.patch("/collections/{cid}/documents/{doc_id}")
    async def patch_document(cid: str, doc_id: str, request: Request):
        entry = registry.get(cid)
        if entry is None:
            return _not_found("collection", cid)
        body = await request.json()
        encoded = body.get("ops")
        if not isinstance(encoded, list) or not encoded:
            return _error(422, "bad-request",
                          'body must carry "ops": a non-empty op list')
        try:
            op_list = [ops.entry_from_obj(o) for o in encoded]
        except (PathError, KeyError, TypeError, ValueError) as e:
            return _error(422, "bad-op", f"undecodable op: {e}")
        for op in op_list:
            target = getattr(op, "doc_id", None)
            if target != doc_id:
                return _error(422, "bad-op",
                              f"op targets {target!r}, not this document")
        with entry.lock:
            if entry.snapshot.documents.get(doc_id) is None:
                return _not_found("document", doc_id)
            stale = _stale(request, entry.snapshot.version, required=True)
            if stale is not None:
                return stale
            result = ops.apply_script(entry.snapshot, tuple(op_list))
            if not result.ok:
                failed = next(o for o in result.outcomes if not o.ok)
                return _error(422, "op-failed", failed.error or "op failed",
                              op_index=failed.index,
                              version=entry.snapshot.version)
            _commit(entry, result.collection)
            return {"version": result.collection.version,
                    "applied": len(op_list),
                    "document": canon.document_to_obj(
                        result.collection.documents[doc_id])}

    # ------------------------------------------------------------------
    # resources + annotations

    @app.get("/collections/{cid}/resources")
    def list_resources(cid: str):
        entry = registry.get(cid)
        if entry is None:
            return _not_found("collection", cid)
        snap = entry.snapshot
        return {"version": snap.version,
                "resources": [canon.resource_to_obj(snap.resources[rid])
                              for rid in sorted(snap.resources)]}

    @app.get("/collections/{cid}/resources/{rid}/content")
    def resource_content(cid: str, rid: str):
        entry = registry.get(cid)
        if entry is None:
            return _not_found("collection", cid)
        snap = entry.snapshot
        res = snap.resources.get(rid)
        if res is None:
            return _not_found("resource", rid)
        data = snap.resource_bytes.get(rid)
        if data is None:
            return _error(404, "external-resource",
                          f"{rid} is an external reference: {res.locator}")
        return Response(content=data, media_type=res.media_type)

    @app.get("/collections/{cid}/annotations")
    def list_annotations(cid: str, resource: str | None = None):
        entry = registry.get(cid)
        if entry is None:
            return _not_found("collection", cid)
        snap = entry.snapshot
        anns = [asdict(snap.annotations[aid]) for aid in sorted(snap.annotations)
                if resource is None or snap.annotations[aid].resource_id == resource]
        return {"version": snap.version, "annotations": anns}

    @app.post("/collections/{cid}/annotations", status_code=201)
    async def post_annotation(cid: str, request: Request):
        entry = registry.get(cid)
        if entry is None:
            return _not_found("collection", cid)
        body = await request.json()
        try:
            op = ops.AnnotateOp(
                resource_id=str(body["resource_id"]),
                x=int(body["x"]), y=int(body["y"]),
                w=int(body["w"]), h=int(body["h"]),
                comment=str(body["comment"]),
                author=str(body.get("author", "")))
        except (KeyError, TypeError, ValueError) as e:
            return _error(422, "bad-request", f"bad annotation body: {e}")
        with entry.lock:
            stale = _stale(request, entry.snapshot.version)
            if stale is not None:
                return stale
            try:
                c = ops.apply_op(entry.snapshot, op)
            except ops.OpError as e:
                return _error(422, e.rule, str(e))
            created = c is not entry.snapshot
            if created:
                _commit(entry, c)
        aid = annotation_id(op.resource_id, op.x, op.y, op.w, op.h, op.comment)
        return {"annotation": aid, "created": created, "version": c.version}

    # ------------------------------------------------------------------
    # exports

    @app.post("/collections/{cid}/exports", status_code=202)
    async def post_export(cid: str, request: Request):
        entry = registry.get(cid)
        if entry is None:
            return _not_found("collection", cid)
        body = await request.json()
        profile_obj = body.get("profile", body)
        if not isinstance(profile_obj, dict):
            return _error(422, "bad-request", "profile must be an object")
        snap = entry.snapshot
        try:
            profile = _profile_from_obj(profile_obj)
        except (PathError, TypeError, ValueError) as e:
            return _error(422, "bad-profile", str(e))
        problems = validate_profile(snap, profile)
        if problems:
            return _error(422, "bad-profile", "; ".join(problems))
        jid = uuid.uuid4().hex[:12]
        artifact_dir = registry.root / "exports" / cid
        artifact_dir.mkdir(parents=True, exist_ok=True)
        job = ExportJob(jid, profile_obj, artifact_dir / f"{jid}.zip")
        registry.add_job(cid, job)

        def run() -> None:
            job.state = "running"
            try:
                data = export_package(snap, profile)
                report = validate_package(data)
                if not report.ok:
                    raise ExportError(f"built package fails validation:\n{report}")
                job.artifact.write_bytes(data)
                job.bytes = len(data)
                job.state = "done"
            except Exception as e:  # job must never crash the service
                job.error = str(e)
                job.state = "failed"

        threading.Thread(target=run, name=f"export-{jid}", daemon=True).start()
        return {"job": jid, "state": job.state}

    @app.get("/collections/{cid}/exports/{jid}")
    def get_export(cid: str, jid: str):
        job = registry.job(cid, jid)
        if job is None or registry.get(cid) is None:
            return _not_found("export-job", jid)
        return job.as_obj()

    @app.get("/collections/{cid}/exports/{jid}/artifact")
    def get_artifact(cid: str, jid: str):
        job = registry.job(cid, jid)
        if job is None or registry.get(cid) is None:
            return _not_found("export-job", jid)
        if job.state != "done":
            return _error(409, "job-not-done",
                          f"job is {job.state}", state=job.state)
        return Response(content=job.artifact.read_bytes(),
                        media_type="application/zip",
                        headers={"Content-Disposition":
                                 f'attachment; filename="{cid}-{jid}.zip"'})

    # ------------------------------------------------------------------
    # log + validation

    @app.get("/collections/{cid}/log")
    def get_log(cid: str):
        entry = registry.get(cid)
        if entry is None:
            return _not_found("collection", cid)
        snap = entry.snapshot
        return PlainTextResponse(dsl.print_log(snap.log),
                                 headers={"X-Collection-Version":
                                          str(snap.version)})

    @app.get("/collections/{cid}/validation")
    def get_validation(cid: str):
        entry = registry.get(cid)
        if entry is None:
            return _not_found("collection", cid)
        snap = entry.snapshot
        report = validate_collection(snap)
        return {"version": snap.version, "ok": report.ok,
                "violations": [asdict(v) for v in report.violations]}

    # ------------------------------------------------------------------
    # static UI (when built)

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True),
                  name="ui")

    return app
