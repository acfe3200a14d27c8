"""On-disk collection store (.clv): a directory or zip with stable layout.

    meta.json             format marker + current version
    schema.json           canonical schema
    docs/<docid>.json     one canonical document per file
    resources.json        resource records (metadata only)
    resources/<id>.<ext>  raw bytes for local resources
    annotations.json      annotation records
    log/ops.cdsl          replayable script text (imports appear as comments)
    log/records.json      full log records with version pairs

Saves are atomic (write-aside then swap) and refuse invalid collections.
A sidecar ``<store>.lock`` file provides a single-writer advisory lock.
"""

from __future__ import annotations

import json
import os
import shutil
import tempfile
import zipfile
from contextlib import contextmanager
from pathlib import Path

from . import canon, dsl
from .model import (
    Collection,
    InvalidCollection,
    ModelError,
    RES_LOCAL,
    STORE_FORMAT,
    STORE_FORMAT_VERSION,
    validate_collection,
)


class StoreError(ModelError):
    pass


def _collection_files(c: Collection) -> dict[str, bytes]:
    """Flatten a collection into the store's path -> bytes map."""
    files: dict[str, bytes] = {
        "meta.json": canon.canonical_bytes({
            "format": STORE_FORMAT,
            "format_version": STORE_FORMAT_VERSION,
            "version": c.version,
        }),
        "schema.json": canon.canonical_bytes(canon.schema_to_obj(c.schema)),
        "resources.json": canon.canonical_bytes(
            {rid: canon.resource_to_obj(r) for rid, r in c.resources.items()}),
        "annotations.json": canon.canonical_bytes(
            {aid: canon.annotation_to_obj(a) for aid, a in c.annotations.items()}),
        "log/records.json": canon.canonical_bytes(
            [canon.log_record_to_obj(rec) for rec in c.log]),
        "log/ops.cdsl": dsl.print_log(c.log).encode("utf-8"),
    }
    for doc_id in sorted(c.documents):
        files[f"docs/{doc_id}.json"] = canon.canonical_bytes(
            canon.document_to_obj(c.documents[doc_id]))
    for rid, res in c.resources.items():
        if res.kind == RES_LOCAL:
            data = c.resource_bytes.get(rid)
            if data is None:
                raise StoreError(f"resource {rid} has no bytes to persist")
            files[res.locator] = data
    return files


def save_collection(c: Collection, path: str | Path) -> None:
    """Persist to `path`; a ``.zip``/``.clvz`` suffix selects zip form.

    The previous store content (if any) is replaced only after the new
    content is fully written.
    """
    report = validate_collection(c)
    if not report.ok:
        raise InvalidCollection(report)
    path = Path(path)
    files = _collection_files(c)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix in (".zip", ".clvz"):
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
        try:
            with os.fdopen(fd, "wb") as fh:
                with zipfile.ZipFile(fh, "w", zipfile.ZIP_STORED) as zf:
                    for name in sorted(files):
                        info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
                        info.external_attr = 0o644 << 16
                        zf.writestr(info, files[name])
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    else:
        tmp_dir = Path(tempfile.mkdtemp(dir=path.parent, prefix=path.name + "."))
        try:
            for name, data in files.items():
                target = tmp_dir / name
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_bytes(data)
            if path.exists():
                old = Path(tempfile.mkdtemp(dir=path.parent, prefix=path.name + ".old."))
                os.replace(path, old / "store")
                os.replace(tmp_dir, path)
                shutil.rmtree(old, ignore_errors=True)
            else:
                os.replace(tmp_dir, path)
        except BaseException:
            shutil.rmtree(tmp_dir, ignore_errors=True)
            raise


class _Reader:
    """Uniform byte access over the two store forms."""

    def __init__(self, path: Path):
        self.path = path
        self.zf: zipfile.ZipFile | None = None
        if path.is_file():
            try:
                self.zf = zipfile.ZipFile(path)
            except zipfile.BadZipFile as e:
                raise StoreError(f"{path} is not a collection store: {e}") from e
        elif not path.is_dir():
            raise StoreError(f"no collection store at {path}")

    def read(self, name: str) -> bytes:
        try:
            if self.zf is not None:
                return self.zf.read(name)
            return (self.path / name).read_bytes()
        except (KeyError, OSError) as e:
            raise StoreError(f"store {self.path} is missing {name}: {e}") from e

    def list_docs(self) -> list[str]:
        if self.zf is not None:
            names = [n[len("docs/"):-len(".json")] for n in self.zf.namelist()
                     if n.startswith("docs/") and n.endswith(".json")]
        else:
            docs = self.path / "docs"
            names = ([p.name[:-len(".json")] for p in docs.iterdir()
                      if p.name.endswith(".json")] if docs.is_dir() else [])
        return sorted(names)

    def close(self) -> None:
        if self.zf is not None:
            self.zf.close()


def load_collection(path: str | Path) -> Collection:
    reader = _Reader(Path(path))
    try:
        meta = json.loads(reader.read("meta.json"))
        if meta.get("format") != STORE_FORMAT:
            raise StoreError(f"{path}: unrecognized store format {meta.get('format')!r}")
        if meta.get("format_version") != STORE_FORMAT_VERSION:
            raise StoreError(f"{path}: unsupported format version "
                             f"{meta.get('format_version')!r}")
        schema = canon.schema_from_obj(json.loads(reader.read("schema.json")))
        documents = {}
        for doc_id in reader.list_docs():
            doc = canon.document_from_obj(json.loads(reader.read(f"docs/{doc_id}.json")))
            if doc.id != doc_id:
                raise StoreError(f"document file docs/{doc_id}.json claims id {doc.id!r}")
            documents[doc_id] = doc
        resources = {}
        blobs = {}
        for rid, obj in json.loads(reader.read("resources.json")).items():
            res, _ = canon.resource_from_obj(obj)
            resources[rid] = res
            if res.kind == RES_LOCAL:
                blobs[rid] = reader.read(res.locator)
        annotations = {aid: canon.annotation_from_obj(obj)
                       for aid, obj in json.loads(reader.read("annotations.json")).items()}
        log = tuple(canon.log_record_from_obj(obj)
                    for obj in json.loads(reader.read("log/records.json")))
        if schema.version != meta.get("version"):
            raise StoreError(f"{path}: meta version {meta.get('version')} does not "
                             f"match schema version {schema.version}")
        return Collection(schema=schema, documents=documents, resources=resources,
                          resource_bytes=blobs, annotations=annotations, log=log)
    finally:
        reader.close()


@contextmanager
def store_lock(path: str | Path):
    """Single-writer advisory lock: ``<store>.lock`` holds the owner pid.

    A lock whose owner process is gone is reclaimed automatically.
    """
    lock_path = Path(str(path) + ".lock")
    lock_path.parent.mkdir(parents=True, exist_ok=True)
    while True:
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            break
        except FileExistsError:
            try:
                pid = int(lock_path.read_text().strip() or "0")
            except (OSError, ValueError):
                pid = 0
            alive = False
            if pid > 0:
                try:
                    os.kill(pid, 0)
                    alive = True
                except OSError:
                    alive = False
            if alive:
                raise StoreError(
                    f"{path} is locked by running process {pid} "
                    f"(remove {lock_path} if that is wrong)")
            try:
                lock_path.unlink()
            except FileNotFoundError:
                pass
    try:
        os.write(fd, str(os.getpid()).encode("ascii"))
        os.close(fd)
        yield
    finally:
        try:
            lock_path.unlink()
        except FileNotFoundError:
            pass
