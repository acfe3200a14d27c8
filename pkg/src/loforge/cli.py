"""Command-line front end for the full pipeline.

Exit codes: 0 success, 1 domain error (invalid op, failed validation),
2 usage error, 3 I/O error (missing/corrupt files, lock contention).
`--porcelain` switches output to canonical JSON for scripting.
"""

from __future__ import annotations

import hashlib
import sys
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path

import click

from . import canon, dsl, ops
from .exporting import (
    DETAIL_FULL,
    DETAILS,
    FORMATS,
    ExportError,
    ExportProfile,
    export_package,
    validate_package,
)
from .importing import available_plugins, run_import
from .importing.records import ImportError_
from .model import (
    Collection,
    InvalidCollection,
    ModelError,
    ValidationReport,
    validate_collection,
)
from .paths import PathError, parse_instance_path, parse_path
from .store import StoreError, load_collection, save_collection, store_lock

EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(path: str) -> Collection:
    try:
        return load_collection(path)
    except FileNotFoundError:
        _fail(EXIT_IO, f"{path}: no such collection store")
    except StoreError as e:
        _fail(EXIT_IO, f"{path}: {e}")
    raise AssertionError("unreachable")


def _save(c: Collection, path: str) -> None:
    try:
        save_collection(c, path)
    except OSError as e:
        _fail(EXIT_IO, f"{path}: {e}")


def _emit(porcelain: bool, obj, human: str) -> None:
    if porcelain:
        click.echo(canon.canonical_bytes(obj).decode("utf-8"), nl=False)
    else:
        click.echo(human)


def _report_obj(report: ValidationReport) -> dict:
    return {"ok": report.ok,
            "violations": [asdict(v) for v in report.violations]}


@click.group()
@click.option("--porcelain", is_flag=True,
              help="Emit canonical JSON instead of human-readable text.")
@click.pass_context
def main(ctx: click.Context, porcelain: bool) -> None:
    """Curate digital collections: import, reshape, annotate, export."""
    ctx.ensure_object(dict)
    ctx.obj["porcelain"] = porcelain


# ---------------------------------------------------------------------------
# import

@main.command("import")
@click.option("--plugin", required=True,
              help=f"Importer to run ({', '.join(available_plugins())}).")
@click.option("--base-url", "base_url", default=None,
              help="Source base URL (remote importers).")
@click.option("--path", "src_path", default=None,
              help="Source path (file-based importers).")
@click.option("--max-cases", type=int, default=None,
              help="Stop after this many records.")
@click.option("--param", "extra_params", multiple=True, metavar="KEY=VALUE",
              help="Additional importer parameter (repeatable).")
@click.argument("store", type=click.Path())
@click.pass_context
def import_cmd(ctx: click.Context, plugin: str, base_url: str | None,
               src_path: str | None, max_cases: int | None,
               extra_params: tuple[str, ...], store: str) -> None:
    """Run an importer and merge its documents into STORE."""
    params: dict[str, str] = {}
    if base_url:
        params["base"] = base_url
    if src_path:
        params["path"] = src_path
    if max_cases is not None:
        params["max_cases"] = str(max_cases)
    for raw in extra_params:
        if "=" not in raw:
            _fail(EXIT_USAGE, f"--param needs KEY=VALUE, got {raw!r}")
        key, _, value = raw.partition("=")
        params[key] = value
    c = _load(store) if Path(store).exists() else Collection.empty()
    with _locked(store):
        try:
            c, report = run_import(c, plugin, params)
        except (ImportError_, InvalidCollection) as e:
            _fail(EXIT_DOMAIN, str(e))
        _save(c, store)
    obj = {"plugin": report.plugin, "documents": report.documents,
           "linked_documents": report.linked_documents,
           "resources": report.resources, "skipped": report.skipped,
           "errors": list(report.errors),
           "elapsed_s": round(report.elapsed_s, 3),
           "version": c.version}
    lines = [f"imported {report.documents} documents "
             f"(+{report.linked_documents} linked), "
             f"{report.resources} new resources, "
             f"{report.skipped} skipped, in {report.elapsed_s:.2f}s",
             f"store version: {c.version}"]
    lines += [f"warning: {e}" for e in report.errors]
    _emit(ctx.obj["porcelain"], obj, "\n".join(lines))


@contextmanager
def _locked(path: str):
    try:
        with store_lock(path):
            yield
    except StoreError as e:
        _fail(EXIT_IO, str(e))


# ---------------------------------------------------------------------------
# schema

@main.group()
def schema() -> None:
    """Inspect or reshape the element-type schema."""


@schema.command("show")
@click.argument("store", type=click.Path())
@click.pass_context
def schema_show(ctx: click.Context, store: str) -> None:
    """Print every element type with kind and multiplicity."""
    c = _load(store)
    if ctx.obj["porcelain"]:
        _emit(True, {"version": c.version,
                     "schema": canon.schema_to_obj(c.schema)}, "")
        return
    from .paths import format_path
    lines = []
    for path in c.schema.paths():
        etype = c.schema.find(path)
        lines.append(f"{format_path(path)}  [{etype.kind}, {etype.multiplicity}]")
    lines.append(f"element types: {c.schema.type_count()}")
    lines.append(f"version: {c.version}")
    click.echo("\n".join(lines))


@schema.command("apply")
@click.argument("store", type=click.Path())
@click.argument("script_file", type=click.Path())
@click.option("--dry-run", is_flag=True,
              help="Report what would happen without writing the store.")
@click.pass_context
def schema_apply(ctx: click.Context, store: str, script_file: str,
                 dry_run: bool) -> None:
    """Apply a curation script to STORE (atomically: all ops or none)."""
    try:
        text = Path(script_file).read_text(encoding="utf-8")
    except OSError as e:
        _fail(EXIT_IO, f"{script_file}: {e}")
    try:
        script = dsl.parse_script(text)
    except dsl.DslError as e:
        _fail(EXIT_DOMAIN, f"{script_file}: {e}")
    c = _load(store)
    result = ops.apply_script(c, script)
    outcome_objs = [{"index": o.index, "op": dsl.print_op(o.op),
                     "ok": o.ok, "error": o.error}
                    for o in result.outcomes]
    obj = {"ok": result.ok, "dry_run": dry_run, "outcomes": outcome_objs,
           "version": result.collection.version if result.ok else c.version}
    lines = []
    for o in result.outcomes:
        status = "ok" if o.ok else f"FAILED: {o.error}"
        lines.append(f"[{o.index + 1}] {dsl.print_op(o.op)} ... {status}")
    if result.ok and not dry_run:
        with _locked(store):
            _save(result.collection, store)
        lines.append(f"applied {len(result.outcomes)} ops; "
                     f"version: {result.collection.version}")
    elif result.ok:
        lines.append(f"dry run: {len(result.outcomes)} ops would apply cleanly")
    else:
        lines.append("no changes applied")
    _emit(ctx.obj["porcelain"], obj, "\n".join(lines))
    if not result.ok:
        sys.exit(EXIT_DOMAIN)


# ---------------------------------------------------------------------------
# doc edits

@main.group()
def doc() -> None:
    """Edit document content (set values, insert elements, add links)."""


def _doc_mutate(ctx: click.Context, store: str, op) -> None:
    c = _load(store)
    try:
        c2 = ops.apply_op(c, op)
    except ops.OpError as e:
        _fail(EXIT_DOMAIN, str(e))
    with _locked(store):
        _save(c2, store)
    _emit(ctx.obj["porcelain"],
          {"ok": True, "op": dsl.print_op(op), "version": c2.version},
          f"{dsl.print_op(op)}\nversion: {c2.version}")


@doc.command("set")
@click.argument("store", type=click.Path())
@click.argument("doc_id")
@click.argument("instance_path")
@click.argument("text")
@click.pass_context
def doc_set(ctx: click.Context, store: str, doc_id: str, instance_path: str,
            text: str) -> None:
    """Overwrite the text of one atomic instance."""
    try:
        ipath = parse_instance_path(instance_path)
    except PathError as e:
        _fail(EXIT_USAGE, str(e))
    _doc_mutate(ctx, store, ops.SetValueOp(doc_id, ipath, text))


@doc.command("insert")
@click.argument("store", type=click.Path())
@click.argument("doc_id")
@click.argument("parent_instance_path")
@click.argument("type_path")
@click.option("--text", default=None, help="Atomic text payload.")
@click.option("--resource", "resource_id", default=None,
              help="Existing resource id payload.")
@click.option("--doc", "target_doc", default=None,
              help="Link payload: target document id.")
@click.option("--ann", "target_ann", default=None,
              help="Link payload: target annotation id.")
@click.option("--url", default=None, help="Link payload: external URL.")
@click.option("--quiz", "stem", default=None,
              help="Quiz payload: the question stem.")
@click.option("--choice", "choices", multiple=True,
              help="Quiz choice (repeat per choice).")
@click.option("--correct", type=int, default=None,
              help="Quiz: zero-based index of the correct choice.")
@click.option("--explain", default="", help="Quiz: explanation text.")
@click.pass_context
def doc_insert(ctx: click.Context, store: str, doc_id: str,
               parent_instance_path: str, type_path: str, text: str | None,
               resource_id: str | None, target_doc: str | None,
               target_ann: str | None, url: str | None, stem: str | None,
               choices: tuple[str, ...], correct: int | None,
               explain: str) -> None:
    """Insert a new element instance under PARENT_INSTANCE_PATH."""
    try:
        parent = parse_instance_path(parent_instance_path)
        tpath = parse_path(type_path)
    except PathError as e:
        _fail(EXIT_USAGE, str(e))
    from .model import (
        LINK_ANNOTATION,
        LINK_DOCUMENT,
        LINK_EXTERNAL,
        LinkTarget,
        Mcq,
    )
    payloads = []
    if text is not None:
        payloads.append(ops.TextPayload(text))
    if resource_id is not None:
        payloads.append(ops.ResourcePayload(resource_id))
    if target_doc is not None:
        payloads.append(ops.LinkPayload(LinkTarget(LINK_DOCUMENT, target_doc)))
    if target_ann is not None:
        payloads.append(ops.LinkPayload(LinkTarget(LINK_ANNOTATION, target_ann)))
    if url is not None:
        payloads.append(ops.LinkPayload(LinkTarget(LINK_EXTERNAL, url)))
    if stem is not None:
        if correct is None or not choices:
            _fail(EXIT_USAGE, "--quiz needs --choice (2+) and --correct")
        payloads.append(ops.QuizPayload(Mcq(stem=stem, choices=tuple(choices),
                                            correct_index=correct,
                                            explanation=explain)))
    if len(payloads) > 1:
        _fail(EXIT_USAGE, "give at most one payload option")
    payload = payloads[0] if payloads else ops.EmptyPayload()
    _doc_mutate(ctx, store, ops.InsertOp(doc_id, parent, tpath, payload))


@doc.command("link")
@click.argument("store", type=click.Path())
@click.argument("doc_id")
@click.argument("parent_instance_path")
@click.argument("kind", type=click.Choice(["doc", "ann", "url"]))
@click.argument("value")
@click.pass_context
def doc_link(ctx: click.Context, store: str, doc_id: str,
             parent_instance_path: str, kind: str, value: str) -> None:
    """Add a link under PARENT_INSTANCE_PATH (its link-kind child)."""
    try:
        parent = parse_instance_path(parent_instance_path)
    except PathError as e:
        _fail(EXIT_USAGE, str(e))
    from .model import LINK_ANNOTATION, LINK_DOCUMENT, LINK_EXTERNAL, LinkTarget
    target = LinkTarget({"doc": LINK_DOCUMENT, "ann": LINK_ANNOTATION,
                         "url": LINK_EXTERNAL}[kind], value)
    _doc_mutate(ctx, store, ops.LinkOp(doc_id, parent, target))


# ---------------------------------------------------------------------------
# annotate

@main.command()
@click.argument("store", type=click.Path())
@click.argument("resource_id")
@click.option("--rect", required=True, metavar="X,Y,W,H",
              help="Rectangle in image pixels.")
@click.option("--comment", required=True, help="Annotation text.")
@click.option("--author", default="", help="Annotation author.")
@click.pass_context
def annotate(ctx: click.Context, store: str, resource_id: str, rect: str,
             comment: str, author: str) -> None:
    """Attach a rectangle comment to an image resource."""
    try:
        x, y, w, h = (int(part) for part in rect.split(","))
    except ValueError:
        _fail(EXIT_USAGE, f"--rect must be X,Y,W,H integers, got {rect!r}")
    c = _load(store)
    op = ops.AnnotateOp(resource_id, x, y, w, h, comment, author)
    try:
        c2 = ops.apply_op(c, op)
    except ops.OpError as e:
        _fail(EXIT_DOMAIN, str(e))
    from .model import annotation_id
    aid = annotation_id(resource_id, x, y, w, h, comment)
    changed = c2.version != c.version
    if changed:
        with _locked(store):
            _save(c2, store)
    _emit(ctx.obj["porcelain"],
          {"ok": True, "annotation": aid, "created": changed,
           "version": c2.version},
          (f"annotation: {aid}" + ("" if changed else " (already present)")
           + f"\nversion: {c2.version}"))


# ---------------------------------------------------------------------------
# export

@main.command()
@click.argument("store", type=click.Path())
@click.option("--format", "fmt", type=click.Choice(list(FORMATS)),
              default="imscp", show_default=True)
@click.option("--select", default=None, metavar="PATH,...",
              help="Element paths to include (default: everything).")
@click.option("--docs", default=None, metavar="ID,...",
              help="Only these documents.")
@click.option("--detail", type=click.Choice(list(DETAILS)),
              default=DETAIL_FULL, show_default=True)
@click.option("--summary-paths", default=None, metavar="PATH,...",
              help="Paths used when --detail summary.")
@click.option("--quizzes", is_flag=True, help="Include quiz elements.")
@click.option("--epoch", type=int, default=None,
              help="Fix archive timestamps to this POSIX time.")
@click.option("--title", default="Curated collection", show_default=True)
@click.option("-o", "--output", required=True, type=click.Path())
@click.pass_context
def export(ctx: click.Context, store: str, fmt: str, select: str | None,
           docs: str | None, detail: str, summary_paths: str | None,
           quizzes: bool, epoch: int | None, title: str, output: str) -> None:
    """Export STORE as a content-package zip at OUTPUT."""
    c = _load(store)

    def paths_of(raw: str | None) -> tuple:
        if raw is None:
            return ()
        try:
            return tuple(parse_path(p.strip()) for p in raw.split(",") if p.strip())
        except PathError as e:
            _fail(EXIT_USAGE, str(e))
            raise AssertionError("unreachable")

    profile = ExportProfile(
        format=fmt,
        selection=paths_of(select),
        summary_paths=paths_of(summary_paths),
        document_filter=(tuple(d.strip() for d in docs.split(",") if d.strip())
                         if docs is not None else None),
        detail=detail,
        include_quizzes=quizzes,
        fixed_epoch=epoch,
        title=title,
    )
    try:
        data = export_package(c, profile)
    except (ExportError, InvalidCollection) as e:
        _fail(EXIT_DOMAIN, str(e))
    try:
        Path(output).write_bytes(data)
    except OSError as e:
        _fail(EXIT_IO, f"{output}: {e}")
    digest = hashlib.sha256(data).hexdigest()
    _emit(ctx.obj["porcelain"],
          {"ok": True, "path": output, "bytes": len(data), "sha256": digest},
          f"wrote {output} ({len(data)} bytes, sha256 {digest[:16]}...)")


# ---------------------------------------------------------------------------
# validate

@main.command("validate")
@click.argument("target", type=click.Path())
@click.pass_context
def validate_cmd(ctx: click.Context, target: str) -> None:
    """Validate a collection store or an exported package zip."""
    path = Path(target)
    if not path.exists():
        _fail(EXIT_IO, f"{target}: no such file or directory")
    report: ValidationReport
    if path.is_file():
        import zipfile
        try:
            with zipfile.ZipFile(path) as zf:
                names = set(zf.namelist())
        except zipfile.BadZipFile:
            names = set()
        if "imsmanifest.xml" in names or "meta.json" not in names:
            report = validate_package(path.read_bytes())
        else:
            report = validate_collection(_load(target))
    else:
        report = validate_collection(_load(target))
    _emit(ctx.obj["porcelain"], _report_obj(report),
          "ok" if report.ok else str(report))
    if not report.ok:
        sys.exit(EXIT_DOMAIN)


# ---------------------------------------------------------------------------
# log + serve

@main.command("log")
@click.argument("store", type=click.Path())
@click.pass_context
def log_cmd(ctx: click.Context, store: str) -> None:
    """Print the curation history as a replayable script."""
    c = _load(store)
    text = dsl.print_log(c.log)
    if ctx.obj["porcelain"]:
        _emit(True, {"version": c.version, "log": text}, "")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--bind", default="127.0.0.1:8000", show_default=True,
              metavar="HOST:PORT")
@click.option("--storage", default="./collections", show_default=True,
              type=click.Path(), help="Directory holding collection stores.")
@click.option("--ui", "ui_dir", default=None, type=click.Path(),
              help="Directory of built UI assets to serve at /.")
@click.option("--fixture", "fixture_base", default=None, metavar="BASE_URI",
              help="Preload one collection imported from this source base "
                   "when storage is empty.")
def serve(bind: str, storage: str, ui_dir: str | None,
          fixture_base: str | None) -> None:
    """Run the HTTP service (and static UI, when built)."""
    host, _, port_s = bind.rpartition(":")
    if not host or not port_s.isdigit():
        _fail(EXIT_USAGE, f"--bind must be HOST:PORT, got {bind!r}")
    import uvicorn

    from .service import create_app
    app = create_app(Path(storage), ui_dir=ui_dir, fixture_base=fixture_base)
    uvicorn.run(app, host=host, port=int(port_s), log_level="warning")


if __name__ == "__main__":
    main()
