"""Importer for paginated REST-style case archives.

Endpoint shape (relative to the ``base`` parameter):

    cases/index-1.json      {"cases": [{"id", "href"}...], "next": <href|null>}
    cases/<id>.json         one case record; may carry ImageList / TopicRefs /
                            ProtocolDoc fields with file or URL references
    questions/<caseid>.json {"questions": [{stem, choices, correct, explanation}]}
    topics/<id>.json        shared topic pages referenced by TopicRefs

Works over http(s) with polite rate limiting and retries, or over file://
for local snapshots. Image downloads run on a small thread pool (results
are assembled in index order, so output is deterministic); every fetched
case can be spooled next to a cursor file, making interrupted runs
resumable without re-downloading.

Params: base (required), start, max_cases, rps, parallelism, timeout, cursor.
"""

from __future__ import annotations

import base64
import json
import shutil
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any
from urllib.parse import urljoin, urlsplit

from ..model import LINK_DOCUMENT, Mcq, media_type_for
from . import PluginResult, register_plugin
from .records import ImportError_, RawLink, RawQuiz, RawRecord, RawResource, scalar_text


class FetchError(ImportError_):
    pass


class NotFound(FetchError):
    pass


class _RateLimiter:
    """Thread-safe minimum spacing between requests."""

    def __init__(self, rps: float):
        self._interval = 1.0 / rps if rps > 0 else 0.0
        self._next = 0.0
        self._lock = threading.Lock()

    def wait(self) -> None:
        if self._interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            slot = max(now, self._next)
            self._next = slot + self._interval
        delay = slot - time.monotonic()
        if delay > 0:
            time.sleep(delay)


class _Transport:
    def __init__(self, rps: float, timeout: float):
        self._limiter = _RateLimiter(rps)
        self._timeout = timeout
        self._session = None

    def get(self, url: str) -> bytes:
        scheme = urlsplit(url).scheme
        if scheme in ("http", "https"):
            return self._get_http(url)
        try:
            with urllib.request.urlopen(url) as fh:
                return fh.read()
        except urllib.error.URLError as e:
            reason = getattr(e, "reason", e)
            if isinstance(reason, FileNotFoundError):
                raise NotFound(f"not found: {url}") from e
            raise FetchError(f"cannot fetch {url}: {e}") from e

    def _get_http(self, url: str) -> bytes:
        import requests

        if self._session is None:
            self._session = requests.Session()
        last: Exception | None = None
        for attempt in range(3):
            self._limiter.wait()
            try:
                resp = self._session.get(url, timeout=self._timeout)
            except requests.RequestException as e:
                last = e
                time.sleep(0.2 * (2 ** attempt))
                continue
            if resp.status_code == 404:
                raise NotFound(f"not found: {url}")
            if resp.status_code >= 500:
                last = FetchError(f"{url}: HTTP {resp.status_code}")
                time.sleep(0.2 * (2 ** attempt))
                continue
            if resp.status_code != 200:
                raise FetchError(f"{url}: HTTP {resp.status_code}")
            return resp.content
        raise FetchError(f"cannot fetch {url} after retries: {last}")


def _join(base: str, href: str) -> str:
    if urlsplit(href).scheme:
        return href
    if not base.endswith("/"):
        base += "/"
    return urljoin(base, href)


# ---------------------------------------------------------------------------
# Cursor + spool (resume support)

class _Spool:
    """Fetched bundles, either on disk next to a cursor file (resumable)
    or in memory when no cursor was requested."""

    def __init__(self, cursor_path: str | None, base: str):
        self.cursor_path = Path(cursor_path) if cursor_path else None
        self.dir = Path(str(cursor_path) + ".spool") if cursor_path else None
        self.mem: dict[tuple[str, str], dict] = {}
        self.state: dict[str, Any] = {"base": base, "next": None, "listed": []}
        if self.cursor_path and self.cursor_path.exists():
            try:
                prior = json.loads(self.cursor_path.read_text("utf-8"))
            except (OSError, ValueError):
                prior = None
            if prior and prior.get("base") == base:
                self.state = prior

    def save(self) -> None:
        if self.cursor_path:
            self.cursor_path.parent.mkdir(parents=True, exist_ok=True)
            self.cursor_path.write_text(json.dumps(self.state), "utf-8")

    def load_bundle(self, kind: str, item_id: str) -> dict | None:
        if self.dir is None:
            return self.mem.get((kind, item_id))
        f = self.dir / f"{kind}-{item_id}.json"
        if f.is_file():
            try:
                return json.loads(f.read_text("utf-8"))
            except (OSError, ValueError):
                return None
        return None

    def store_bundle(self, kind: str, item_id: str, bundle: dict) -> None:
        if self.dir is None:
            self.mem[(kind, item_id)] = bundle
            return
        f = self.dir / f"{kind}-{item_id}.json"
        f.parent.mkdir(parents=True, exist_ok=True)
        f.write_text(json.dumps(bundle), "utf-8")

    def discard(self) -> None:
        if self.cursor_path and self.cursor_path.exists():
            self.cursor_path.unlink()
        if self.dir and self.dir.exists():
            shutil.rmtree(self.dir, ignore_errors=True)


# ---------------------------------------------------------------------------
# Record mapping

def _convert_plain(value: Any, path: str) -> Any:
    """Pass-through conversion: scalars to text, dicts/lists recursively."""
    if isinstance(value, dict):
        return {k: _convert_plain(v, f"{path}/{k}") for k, v in value.items()
                if v is not None}
    if isinstance(value, list):
        return [_convert_plain(v, path) for v in value if v is not None]
    return scalar_text(value)


def _map_image(obj: dict, base: str, images: dict[str, bytes]) -> dict:
    out: dict[str, Any] = {}
    for key, value in obj.items():
        if value is None:
            continue
        if key == "File":
            url = _join(base, str(value))
            data = images[url]
            name = urlsplit(url).path.rsplit("/", 1)[-1]
            out[key] = RawResource(data=data, media_type=media_type_for(name),
                                   name_hint=name)
        else:
            out[key] = _convert_plain(value, key)
    return out


def _map_questions(questions: list) -> list[RawQuiz]:
    out = []
    for q in questions:
        out.append(RawQuiz(Mcq(stem=str(q["stem"]),
                               choices=tuple(str(ch) for ch in q["choices"]),
                               correct_index=int(q["correct"]),
                               explanation=str(q.get("explanation", "") or ""))))
    return out


def _case_record(case: dict, base: str, questions: list,
                 images: dict[str, bytes]) -> RawRecord:
    case_id = str(case["Id"])
    body: dict[str, Any] = {}
    for key, value in case.items():
        if key in ("Id", "href") or value is None:
            continue
        if key == "ImageList":
            if value:  # an empty list would leave a childless composite
                body[key] = {"Image": [_map_image(o, base, images) for o in value]}
        elif key == "TopicRefs":
            if value:
                body["Topics"] = {
                    "TopicLink": [RawLink(LINK_DOCUMENT, str(t)) for t in value]}
        elif key == "ProtocolDoc":
            body[key] = RawResource(url=str(value))
        else:
            body[key] = _convert_plain(value, key)
    if questions:
        body["Quiz"] = {"Question": _map_questions(questions)}
    return RawRecord(source_id=case_id, tree={"Case": body},
                     locator=_join(base, f"cases/{case_id}.json"))


def _topic_record(topic: dict, base: str) -> RawRecord:
    topic_id = str(topic["Id"])
    body: dict[str, Any] = {}
    for key, value in topic.items():
        if key in ("Id", "href") or value is None:
            continue
        if key == "CaseRefs":
            if value:
                body["SeeAlso"] = {"CaseLink": [RawLink(LINK_DOCUMENT, str(cid))
                                                for cid in value]}
        else:
            body[key] = _convert_plain(value, key)
    return RawRecord(source_id=topic_id, tree={"Topic": body},
                     locator=_join(base, f"topics/{topic_id}.json"))


# ---------------------------------------------------------------------------
# Plugin entry

def import_medpix(params: dict[str, str]) -> PluginResult:
    base = params.get("base")
    if not base:
        raise ImportError_("medpix importer needs a base=<url> parameter")
    start = params.get("start", "cases/index-1.json")
    max_cases = int(params["max_cases"]) if params.get("max_cases") else None
    rps = float(params.get("rps", "8"))
    parallelism = max(1, int(params.get("parallelism", "2")))
    timeout = float(params.get("timeout", "10"))
    transport = _Transport(rps=rps, timeout=timeout)
    spool = _Spool(params.get("cursor"), base)

    def get_json(url: str) -> Any:
        return json.loads(transport.get(url).decode("utf-8"))

    # phase 1: walk the index pages
    state = spool.state
    if not state["listed"] and state.get("next") is None:
        state["next"] = start
    while state["next"] is not None:
        if max_cases is not None and len(state["listed"]) >= max_cases:
            break
        page = get_json(_join(base, state["next"]))
        for entry in page.get("cases", []):
            state["listed"].append({"id": str(entry["id"]), "href": str(entry["href"])})
        state["next"] = page.get("next")
        spool.save()
    listed = state["listed"]
    if max_cases is not None:
        listed = listed[:max_cases]

    # phase 2: fetch each case bundle (images on a bounded pool)
    pool = ThreadPoolExecutor(max_workers=parallelism)
    errors: list[str] = []
    skipped = 0
    try:
        for entry in listed:
            cid = entry["id"]
            if spool.load_bundle("case", cid) is not None:
                continue
            try:
                case = get_json(_join(base, entry["href"]))
                try:
                    qdoc = get_json(_join(base, f"questions/{cid}.json"))
                    questions = qdoc.get("questions", [])
                except NotFound:
                    questions = []
                urls = []
                for img in case.get("ImageList", []) or []:
                    if img.get("File"):
                        urls.append(_join(base, str(img["File"])))
                blobs = list(pool.map(transport.get, urls))
                images = {u: base64.b64encode(b).decode("ascii")
                          for u, b in zip(urls, blobs)}
                bundle = {"case": case, "questions": questions, "images": images}
            except NotFound as e:
                errors.append(str(e))
                skipped += 1
                bundle = None
            if bundle is not None:
                spool.store_bundle("case", cid, bundle)
            spool.save()
    finally:
        pool.shutdown(wait=True)

    # phase 3: topics, in first-reference order
    topic_order: list[str] = []
    for entry in listed:
        bundle = spool.load_bundle("case", entry["id"])
        if bundle:
            for t in bundle["case"].get("TopicRefs", []) or []:
                if str(t) not in topic_order:
                    topic_order.append(str(t))
    for tid in topic_order:
        if spool.load_bundle("topic", tid) is not None:
            continue
        try:
            topic = get_json(_join(base, f"topics/{tid}.json"))
        except NotFound as e:
            errors.append(str(e))
            skipped += 1
            continue
        spool.store_bundle("topic", tid, {"topic": topic})

    # phase 4: assemble records in index order
    records: list[RawRecord] = []
    for entry in listed:
        bundle = spool.load_bundle("case", entry["id"])
        if not bundle:
            continue
        images = {u: base64.b64decode(b) for u, b in bundle["images"].items()}
        records.append(_case_record(bundle["case"], base, bundle["questions"], images))
    linked: list[RawRecord] = []
    for tid in topic_order:
        bundle = spool.load_bundle("topic", tid)
        if bundle:
            linked.append(_topic_record(bundle["topic"], base))

    spool.discard()
    return PluginResult(records=tuple(records), linked_records=tuple(linked),
                        skipped=skipped, errors=tuple(errors))


register_plugin("medpix", import_medpix)
