"""File importers: a directory of JSON records and tabular CSV.

json-dir: every ``*.json`` in the directory becomes one document whose id
is the file stem; nested objects/arrays map to composite/repeated elements,
scalars to text. Params: path (required), pattern.

csv: every row becomes a flat document keyed by the header names.
Params: path (required), delimiter, id_column (default: row number).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from . import PluginResult, register_plugin
from .records import ImportError_, RawRecord, scalar_text
from ..paths import PathError, check_name


def _convert(value, path: str):
    if isinstance(value, dict):
        out = {}
        for key, v in value.items():
            if v is None:
                continue
            try:
                check_name(str(key))
            except PathError as e:
                raise ImportError_(f"bad field name at {path}: {e}") from e
            converted = _convert(v, f"{path}/{key}")
            if converted in ({}, []):
                continue  # empty containers carry no content
            out[str(key)] = converted
        return out
    if isinstance(value, list):
        items = [v for v in value if v is not None]
        if any(isinstance(v, list) for v in items):
            raise ImportError_(f"nested array at {path}")
        converted = [_convert(v, path) for v in items]
        return [v for v in converted if v != {}]
    return scalar_text(value)


def import_json_dir(params: dict[str, str]) -> PluginResult:
    path = params.get("path")
    if not path:
        raise ImportError_("json-dir importer needs a path=<directory> parameter")
    directory = Path(path)
    if not directory.is_dir():
        raise ImportError_(f"{path} is not a directory")
    pattern = params.get("pattern", "*.json")
    records = []
    errors = []
    skipped = 0
    for f in sorted(directory.glob(pattern)):
        try:
            obj = json.loads(f.read_text("utf-8"))
        except (OSError, ValueError) as e:
            errors.append(f"{f.name}: {e}")
            skipped += 1
            continue
        if not isinstance(obj, dict):
            errors.append(f"{f.name}: top level must be an object")
            skipped += 1
            continue
        try:
            tree = _convert(obj, f.stem)
        except ImportError_ as e:
            errors.append(f"{f.name}: {e}")
            skipped += 1
            continue
        if not tree:
            errors.append(f"{f.name}: record contains no data")
            skipped += 1
            continue
        records.append(RawRecord(source_id=f.stem, tree=tree, locator=str(f)))
    return PluginResult(records=tuple(records), skipped=skipped, errors=tuple(errors))


def import_csv(params: dict[str, str]) -> PluginResult:
    path = params.get("path")
    if not path:
        raise ImportError_("csv importer needs a path=<file> parameter")
    f = Path(path)
    if not f.is_file():
        raise ImportError_(f"{path} is not a file")
    delimiter = params.get("delimiter", ",")
    id_column = params.get("id_column")
    records = []
    errors = []
    skipped = 0
    with f.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise ImportError_(f"{path} is empty") from None
        names = [h.strip() for h in header]
        for name in names:
            try:
                check_name(name)
            except PathError as e:
                raise ImportError_(f"bad column name in {path}: {e}") from e
        if len(set(names)) != len(names):
            raise ImportError_(f"duplicate column names in {path}")
        if id_column is not None and id_column not in names:
            raise ImportError_(f"id_column {id_column!r} is not a column of {path}")
        for i, row in enumerate(reader, 1):
            if not any(cell.strip() for cell in row):
                continue
            if len(row) > len(names):
                errors.append(f"row {i}: {len(row)} cells for {len(names)} columns")
                skipped += 1
                continue
            tree = {name: row[j] for j, name in enumerate(names)
                    if j < len(row) and row[j] != ""}
            doc_id = tree.get(id_column, "").strip() if id_column else f"row-{i:04d}"
            if not doc_id:
                errors.append(f"row {i}: empty id cell")
                skipped += 1
                continue
            records.append(RawRecord(source_id=doc_id, tree=tree,
                                     locator=f"{f}#{i}"))
    return PluginResult(records=tuple(records), skipped=skipped, errors=tuple(errors))


register_plugin("json-dir", import_json_dir)
register_plugin("csv", import_csv)
