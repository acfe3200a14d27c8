"""HTTP service tests: one TestClient per storage root.

Collections are created and mutated purely through the HTTP surface;
only the replay test reaches into the on-disk store, because checking
"the log reproduces the head snapshot" needs canonical bytes.
"""

from __future__ import annotations

import hashlib
import time
from collections import Counter
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from loforge import canon, dsl, ops
from loforge.exporting import validate_package
from loforge.importing import run_import
from loforge.model import Collection
from loforge.service import ExportJob, create_app
from loforge.store import load_collection, save_collection

# ---------------------------------------------------------------------------
# fixtures


@pytest.fixture(scope="module")
def storage(tmp_path_factory) -> Path:
    return tmp_path_factory.mktemp("service-store")


@pytest.fixture(scope="module")
def client(storage) -> TestClient:
    return TestClient(create_app(storage))


def _new_collection(client: TestClient, **params) -> str:
    r = client.post("/collections", params=params)
    assert r.status_code == 201, r.text
    return r.json()["id"]


def _import_fixture(client: TestClient, cid: str, base: str) -> dict:
    r = client.post(f"/collections/{cid}/import",
                    json={"plugin": "medpix", "params": {"base": base}})
    assert r.status_code == 200, r.text
    return r.json()


def _version(client: TestClient, cid: str) -> int:
    return client.get(f"/collections/{cid}").json()["version"]


@pytest.fixture(scope="module")
def raw(client, fixture_base) -> dict:
    """A freshly imported collection; tests here must not mutate it."""
    cid = _new_collection(client)
    report = _import_fixture(client, cid, fixture_base)
    return {"cid": cid, "report": report}


@pytest.fixture(scope="module")
def work(client, fixture_base, curation_text) -> dict:
    """An imported + curated collection that mutation tests build on."""
    cid = _new_collection(client)
    _import_fixture(client, cid, fixture_base)
    r = client.post(f"/collections/{cid}/schema/ops",
                    content=curation_text.encode("utf-8"),
                    headers={"Content-Type": "text/plain", "If-Match": "1"})
    assert r.status_code == 200, r.text
    return {"cid": cid, "curation": r.json()}


def _find_child(obj: dict, name: str) -> dict:
    return next(ch for ch in obj["children"] if ch["name"] == name)


# ---------------------------------------------------------------------------
# collections


def test_create_empty_collection(client):
    r = client.post("/collections")
    assert r.status_code == 201
    body = r.json()
    assert body["version"] == 0
    info = client.get(f"/collections/{body['id']}").json()
    assert info == {"id": body["id"], "version": 0, "documents": 0,
                    "resources": 0, "annotations": 0, "element_types": 0,
                    "log_records": 0}
    listed = client.get("/collections").json()["collections"]
    assert body["id"] in [c["id"] for c in listed]


def test_create_collection_rejects_bad_root_name(client):
    r = client.post("/collections", params={"root": "a/b"})
    assert r.status_code == 422
    assert r.json()["error"] == "bad-root-name"


def test_create_collection_from_uploaded_store(client, tmp_path):
    c = ops.apply_op(Collection.empty("bundle"), ops.RenameOp((), "bundle2"))
    path = tmp_path / "up.clvz"
    save_collection(c, path)
    r = client.post("/collections", content=path.read_bytes())
    assert r.status_code == 201
    body = r.json()
    assert body["version"] == 1
    schema = client.get(f"/collections/{body['id']}/schema").json()
    assert schema["schema"]["root"]["name"] == "bundle2"


def test_create_collection_rejects_garbage_body(client):
    r = client.post("/collections", content=b"this is not a zip")
    assert r.status_code == 422
    assert r.json()["error"] == "bad-store"


def test_unknown_collection_is_404_everywhere(client):
    gets = ["", "/schema", "/documents", "/documents/case-001",
            "/resources", "/resources/xx/content", "/annotations",
            "/log", "/validation"]
    for suffix in gets:
        r = client.get(f"/collections/nosuch{suffix}")
        assert r.status_code == 404, suffix
        assert r.json()["error"].startswith("unknown-"), suffix
    posts = [("/import", {"plugin": "medpix", "params": {}}),
             ("/annotations", {"resource_id": "x", "x": 0, "y": 0,
                               "w": 1, "h": 1, "comment": "c"}),
             ("/exports", {"format": "imscp"})]
    for suffix, body in posts:
        r = client.post(f"/collections/nosuch{suffix}", json=body)
        assert r.status_code == 404, suffix
    r = client.patch("/collections/nosuch/documents/d", json={"ops": [{}]})
    assert r.status_code == 404


# ---------------------------------------------------------------------------
# import


def test_import_reports_fixture_counts(client, raw):
    report = raw["report"]
    assert report["documents"] == 12
    assert report["linked_documents"] == 6
    assert report["resources"] == 17
    assert report["skipped"] == 0
    assert report["errors"] == []
    assert report["version"] == 1
    assert isinstance(report["elapsed_s"], float)
    schema = client.get(f"/collections/{raw['cid']}/schema").json()
    assert schema["element_types"] == 88
    assert schema["version"] == 1


def test_import_rejects_bad_bodies(client, raw):
    cid = raw["cid"]
    r = client.post(f"/collections/{cid}/import", json={"plugin": 5})
    assert r.status_code == 422
    assert r.json()["error"] == "bad-request"
    r = client.post(f"/collections/{cid}/import",
                    json={"plugin": "no-such-plugin", "params": {}})
    assert r.status_code == 422
    assert r.json()["error"] == "import-failed"
    assert _version(client, cid) == 1


def test_import_honors_if_match_when_sent(client, raw):
    cid = raw["cid"]
    r = client.post(f"/collections/{cid}/import",
                    json={"plugin": "medpix", "params": {"base": "file:///x/"}},
                    headers={"If-Match": "99"})
    assert r.status_code == 409
    assert r.json()["error"] == "version-conflict"
    assert r.json()["version"] == 1


# ---------------------------------------------------------------------------
# schema ops


def test_schema_ops_require_if_match(client, raw):
    cid = raw["cid"]
    r = client.post(f"/collections/{cid}/schema/ops",
                    content=b"rename /Case as Kase",
                    headers={"Content-Type": "text/plain"})
    assert r.status_code == 428
    assert r.json()["error"] == "missing-if-match"
    assert _version(client, cid) == 1


def test_schema_ops_conflict_on_stale_version(client, raw):
    cid = raw["cid"]
    r = client.post(f"/collections/{cid}/schema/ops",
                    content=b"rename /Case as Kase",
                    headers={"Content-Type": "text/plain", "If-Match": "0"})
    assert r.status_code == 409
    body = r.json()
    assert body["error"] == "version-conflict"
    assert body["version"] == 1
    assert _version(client, cid) == 1


def test_schema_ops_reject_unparsable_script(client, raw):
    r = client.post(f"/collections/{raw['cid']}/schema/ops",
                    content=b"renam /x\n",
                    headers={"Content-Type": "text/plain", "If-Match": "1"})
    assert r.status_code == 422
    assert r.json()["error"] == "dsl-error"


def test_schema_ops_reject_undecodable_op(client, raw):
    r = client.post(f"/collections/{raw['cid']}/schema/ops",
                    json={"ops": [{"op": "wat"}]},
                    headers={"If-Match": "1"})
    assert r.status_code == 422
    assert r.json()["error"] == "bad-op"


def test_schema_ops_reject_empty_body(client, raw):
    r = client.post(f"/collections/{raw['cid']}/schema/ops",
                    json={}, headers={"If-Match": "1"})
    assert r.status_code == 422
    assert r.json()["error"] == "bad-request"


def test_schema_ops_text_script_applies(client):
    cid = _new_collection(client)
    r = client.post(f"/collections/{cid}/schema/ops",
                    content=b"rename / as Bundle\n",
                    headers={"Content-Type": "text/plain", "If-Match": "0"})
    assert r.status_code == 200
    body = r.json()
    assert body["version"] == 1
    assert body["applied"] == 1
    assert body["outcomes"][0]["ok"] is True
    schema = client.get(f"/collections/{cid}/schema").json()
    assert schema["schema"]["root"]["name"] == "Bundle"


def test_schema_ops_encoded_list_applies(client):
    cid = _new_collection(client)
    r = client.post(f"/collections/{cid}/schema/ops",
                    json={"ops": [{"op": "rename", "path": "/",
                                   "new_name": "Renamed"}]},
                    headers={"If-Match": "0"})
    assert r.status_code == 200
    assert r.json()["version"] == 1


def test_schema_ops_fail_atomically(client):
    cid = _new_collection(client)
    script = "rename / as First\nremove /Nope\n"
    r = client.post(f"/collections/{cid}/schema/ops",
                    content=script.encode("utf-8"),
                    headers={"Content-Type": "text/plain", "If-Match": "0"})
    assert r.status_code == 422
    body = r.json()
    assert body["error"] == "op-failed"
    assert body["op_index"] == 1
    assert body["version"] == 0
    assert [o["ok"] for o in body["outcomes"]] == [True, False]
    # nothing was applied, not even the op that succeeded on its own
    schema = client.get(f"/collections/{cid}/schema").json()
    assert schema["version"] == 0
    assert schema["schema"]["root"]["name"] == "collection"


def test_curation_script_runs_over_http(client, work):
    body = work["curation"]
    assert body["version"] == 27
    assert body["applied"] == 26
    assert all(o["ok"] for o in body["outcomes"])
    schema = client.get(f"/collections/{work['cid']}/schema").json()
    assert schema["element_types"] == 33
    case = _find_child(schema["schema"]["root"], "Case")
    assert "Personal Data" in [t["name"] for t in case["children"]]


# ---------------------------------------------------------------------------
# documents


def test_documents_listing_pages(client, work):
    cid = work["cid"]
    body = client.get(f"/collections/{cid}/documents").json()
    assert body["total"] == 18
    assert body["page"] == 1 and body["pages"] == 1
    ids = [d["id"] for d in body["documents"]]
    assert ids == sorted(ids) and len(ids) == 18
    assert ids[0] == "case-001" and ids[-1] == "topic-06"
    assert all(d["title"] for d in body["documents"])

    page2 = client.get(f"/collections/{cid}/documents",
                       params={"page": 2, "page_size": 5}).json()
    assert page2["pages"] == 4
    assert [d["id"] for d in page2["documents"]] == ids[5:10]

    clamped = client.get(f"/collections/{cid}/documents",
                         params={"page": 99, "page_size": 5}).json()
    assert clamped["page"] == 4
    assert [d["id"] for d in clamped["documents"]] == ids[15:]


def test_get_document(client, work):
    cid = work["cid"]
    body = client.get(f"/collections/{cid}/documents/case-001").json()
    assert body["document"]["id"] == "case-001"
    assert body["document"]["root"]["name"] == "collection"
    r = client.get(f"/collections/{cid}/documents/case-999")
    assert r.status_code == 404
    assert r.json()["error"] == "unknown-document"


def test_patch_document_sets_value(client, work):
    cid = work["cid"]
    version = _version(client, cid)
    op = {"op": "set", "doc_id": "case-002",
          "instance_path": "/Case/History", "text": "Edited history."}
    r = client.patch(f"/collections/{cid}/documents/case-002",
                     json={"ops": [op]},
                     headers={"If-Match": str(version)})
    assert r.status_code == 200, r.text
    body = r.json()
    assert body["version"] == version + 1
    case = _find_child(body["document"]["root"], "Case")
    assert _find_child(case, "History")["text"] == "Edited history."


def test_patch_document_requires_if_match(client, work):
    cid = work["cid"]
    op = {"op": "set", "doc_id": "case-002",
          "instance_path": "/Case/History", "text": "x"}
    r = client.patch(f"/collections/{cid}/documents/case-002",
                     json={"ops": [op]})
    assert r.status_code == 428
    r = client.patch(f"/collections/{cid}/documents/case-002",
                     json={"ops": [op]}, headers={"If-Match": "1"})
    assert r.status_code == 409


def test_patch_document_rejects_foreign_target(client, work):
    cid = work["cid"]
    version = _version(client, cid)
    op = {"op": "set", "doc_id": "case-003",
          "instance_path": "/Case/History", "text": "x"}
    r = client.patch(f"/collections/{cid}/documents/case-002",
                     json={"ops": [op]}, headers={"If-Match": str(version)})
    assert r.status_code == 422
    assert r.json()["error"] == "bad-op"
    # a schema op has no document target at all
    r = client.patch(f"/collections/{cid}/documents/case-002",
                     json={"ops": [{"op": "rename", "path": "/Case",
                                    "new_name": "Kase"}]},
                     headers={"If-Match": str(version)})
    assert r.status_code == 422
    assert r.json()["error"] == "bad-op"
    assert _version(client, cid) == version


def test_patch_document_failure_leaves_version(client, work):
    cid = work["cid"]
    version = _version(client, cid)
    op = {"op": "set", "doc_id": "case-002",
          "instance_path": "/Case/Nothing", "text": "x"}
    r = client.patch(f"/collections/{cid}/documents/case-002",
                     json={"ops": [op]}, headers={"If-Match": str(version)})
    assert r.status_code == 422
    body = r.json()
    assert body["error"] == "op-failed"
    assert body["op_index"] == 0
    assert _version(client, cid) == version


def test_patch_unknown_document(client, work):
    r = client.patch(f"/collections/{work['cid']}/documents/case-999",
                     json={"ops": [{"op": "set", "doc_id": "case-999",
                                    "instance_path": "/Case/History",
                                    "text": "x"}]},
                     headers={"If-Match": "1"})
    assert r.status_code == 404


# ---------------------------------------------------------------------------
# resources + annotations


def test_resources_listing(client, work):
    body = client.get(f"/collections/{work['cid']}/resources").json()
    resources = body["resources"]
    assert len(resources) == 17
    assert Counter(r["kind"] for r in resources) == {"local-file": 8,
                                                     "external-url": 9}
    assert [r["id"] for r in resources] == sorted(r["id"] for r in resources)
    for r in resources:
        assert r["media_type"] and r["locator"]


def test_resource_content_round_trips_bytes(client, work):
    cid = work["cid"]
    resources = client.get(f"/collections/{cid}/resources").json()["resources"]
    local = next(r for r in resources if r["kind"] == "local-file")
    r = client.get(f"/collections/{cid}/resources/{local['id']}/content")
    assert r.status_code == 200
    assert r.headers["content-type"].startswith(local["media_type"])
    assert hashlib.sha256(r.content).hexdigest()[:16] == local["id"]
    assert len(r.content) == local["byte_size"]


def test_resource_content_external_and_unknown(client, work):
    cid = work["cid"]
    resources = client.get(f"/collections/{cid}/resources").json()["resources"]
    ext = next(r for r in resources if r["kind"] == "external-url")
    r = client.get(f"/collections/{cid}/resources/{ext['id']}/content")
    assert r.status_code == 404
    assert r.json()["error"] == "external-resource"
    assert ext["locator"] in r.json()["message"]
    r = client.get(f"/collections/{cid}/resources/ffffffffffffffff/content")
    assert r.status_code == 404
    assert r.json()["error"] == "unknown-resource"


def test_annotation_create_list_and_repeat(client, work):
    cid = work["cid"]
    resources = client.get(f"/collections/{cid}/resources").json()["resources"]
    rid = next(r for r in resources if r["kind"] == "local-file")["id"]
    other = next(r for r in resources if r["id"] != rid)["id"]
    version = _version(client, cid)
    payload = {"resource_id": rid, "x": 5, "y": 6, "w": 30, "h": 20,
               "comment": "margin", "author": "rev"}
    r = client.post(f"/collections/{cid}/annotations", json=payload)
    assert r.status_code == 201, r.text
    first = r.json()
    assert first["created"] is True
    assert first["version"] == version + 1

    anns = client.get(f"/collections/{cid}/annotations").json()["annotations"]
    mine = next(a for a in anns if a["id"] == first["annotation"])
    assert (mine["resource_id"], mine["x"], mine["y"], mine["w"], mine["h"],
            mine["comment"], mine["author"]) == (rid, 5, 6, 30, 20,
                                                 "margin", "rev")
    by_rid = client.get(f"/collections/{cid}/annotations",
                        params={"resource": rid}).json()["annotations"]
    assert first["annotation"] in [a["id"] for a in by_rid]
    by_other = client.get(f"/collections/{cid}/annotations",
                          params={"resource": other}).json()["annotations"]
    assert first["annotation"] not in [a["id"] for a in by_other]

    # same rectangle again: acknowledged but nothing new is written
    again = client.post(f"/collections/{cid}/annotations", json=payload)
    assert again.status_code == 201
    assert again.json()["created"] is False
    assert again.json()["version"] == version + 1


def test_annotation_rejects_bad_bodies(client, work):
    cid = work["cid"]
    r = client.post(f"/collections/{cid}/annotations",
                    json={"resource_id": "x", "x": 0})
    assert r.status_code == 422
    assert r.json()["error"] == "bad-request"
    r = client.post(f"/collections/{cid}/annotations",
                    json={"resource_id": "ffffffffffffffff", "x": 0, "y": 0,
                          "w": 4, "h": 4, "comment": "c"})
    assert r.status_code == 422
    r = client.post(f"/collections/{cid}/annotations",
                    json={"resource_id": "x", "x": 0, "y": 0, "w": 4, "h": 4,
                          "comment": "c"},
                    headers={"If-Match": "0"})
    assert r.status_code == 409


# ---------------------------------------------------------------------------
# exports


def _wait_job(client: TestClient, cid: str, jid: str, timeout=60.0) -> dict:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        obj = client.get(f"/collections/{cid}/exports/{jid}").json()
        if obj["state"] in ("done", "failed"):
            return obj
        time.sleep(0.05)
    raise AssertionError("export job did not settle in time")


def test_export_job_lifecycle(client, work):
    cid = work["cid"]
    r = client.post(f"/collections/{cid}/exports",
                    json={"format": "imscp", "include_quizzes": True,
                          "fixed_epoch": 0})
    assert r.status_code == 202
    jid = r.json()["job"]
    assert r.json()["state"] in ("queued", "running")
    job = _wait_job(client, cid, jid)
    assert job["state"] == "done", job.get("error")
    assert job["bytes"] > 0
    assert job["profile"]["format"] == "imscp"

    art = client.get(f"/collections/{cid}/exports/{jid}/artifact")
    assert art.status_code == 200
    assert art.headers["content-type"] == "application/zip"
    assert "attachment" in art.headers["content-disposition"]
    assert len(art.content) == job["bytes"]
    assert validate_package(art.content).ok


def test_export_scorm_profile_wrapper(client, work):
    cid = work["cid"]
    r = client.post(f"/collections/{cid}/exports",
                    json={"profile": {"format": "scorm12",
                                      "include_quizzes": True,
                                      "fixed_epoch": 0}})
    assert r.status_code == 202
    job = _wait_job(client, cid, r.json()["job"])
    assert job["state"] == "done", job.get("error")
    art = client.get(f"/collections/{cid}/exports/{r.json()['job']}/artifact")
    assert validate_package(art.content).ok


def test_export_rejects_bad_profiles(client, work):
    cid = work["cid"]
    r = client.post(f"/collections/{cid}/exports", json={"format": "weird"})
    assert r.status_code == 422
    assert r.json()["error"] == "bad-profile"
    r = client.post(f"/collections/{cid}/exports",
                    json={"selection": ["/No/Such"]})
    assert r.status_code == 422
    assert r.json()["error"] == "bad-profile"
    r = client.post(f"/collections/{cid}/exports", json={"profile": 7})
    assert r.status_code == 422
    assert r.json()["error"] == "bad-request"


def test_export_artifact_not_ready(client, work, storage):
    cid = work["cid"]
    registry = client.app.state.registry
    stub = ExportJob("stubjob", {}, storage / "never.zip")
    registry.add_job(cid, stub)
    r = client.get(f"/collections/{cid}/exports/stubjob/artifact")
    assert r.status_code == 409
    assert r.json()["error"] == "job-not-done"
    assert r.json()["state"] == "queued"
    r = client.get(f"/collections/{cid}/exports/nojob")
    assert r.status_code == 404
    assert r.json()["error"] == "unknown-export-job"


# ---------------------------------------------------------------------------
# validation, log, replay


def test_validation_endpoint(client, work):
    body = client.get(f"/collections/{work['cid']}/validation").json()
    assert body["ok"] is True
    assert body["violations"] == []


def test_log_text_and_version_header(client, work):
    cid = work["cid"]
    version = _version(client, cid)
    r = client.get(f"/collections/{cid}/log")
    assert r.status_code == 200
    assert r.headers["content-type"].startswith("text/plain")
    assert r.headers["x-collection-version"] == str(version)
    lines = r.text.splitlines()
    assert len(lines) == version  # one line per recorded change
    assert lines[0].startswith("# import medpix ")
    assert "documents=12" in lines[0]


def test_log_replay_rebuilds_head_snapshot(client, work, storage,
                                           fixture_base):
    """The recorded history alone reproduces the stored state, byte for
    byte: a fresh import with the logged parameters plus the logged ops."""
    cid = work["cid"]
    log_text = client.get(f"/collections/{cid}/log").text

    replayed, _report = run_import(Collection.empty(), "medpix",
                                   {"base": fixture_base})
    script = dsl.parse_script(log_text)
    result = ops.apply_script(replayed, script)
    assert result.ok, [o.error for o in result.outcomes if not o.ok]

    head = load_collection(storage / f"{cid}.clv")
    assert canon.canonical_serialize(result.collection) == \
        canon.canonical_serialize(head)
    assert result.collection.version == _version(client, cid)


# ---------------------------------------------------------------------------
# registry behavior across app instances


def test_registry_reloads_saved_stores(client, storage, work, raw):
    (storage / "junk.clv").write_text("not a store", encoding="utf-8")
    second = TestClient(create_app(storage))
    listed = {c["id"]: c for c in
              second.get("/collections").json()["collections"]}
    assert "junk" not in listed
    for cid in (raw["cid"], work["cid"]):
        assert listed[cid]["version"] == _version(client, cid)
        assert listed[cid]["documents"] == 18


def test_fixture_seed_creates_one_collection(tmp_path, fixture_base):
    first = TestClient(create_app(tmp_path / "seeded", fixture_base=fixture_base))
    listed = first.get("/collections").json()["collections"]
    assert len(listed) == 1
    assert listed[0]["documents"] == 18
    # a second boot over the same storage must not seed again
    again = TestClient(create_app(tmp_path / "seeded", fixture_base=fixture_base))
    assert len(again.get("/collections").json()["collections"]) == 1
