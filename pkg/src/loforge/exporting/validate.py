"""Structural validation of exported content packages.

Checks the things an LMS import would trip over: manifest presence and
well-formedness, schema/version declaration, a resolvable default
organization, item -> resource -> file integrity, unique identifiers,
and archive hygiene (no unreachable or unsafe entries).
"""

from __future__ import annotations

import io
import posixpath
import zipfile
from xml.etree import ElementTree as ET

from ..model import ValidationReport, Violation


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _attr(el: ET.Element, name: str) -> str | None:
    for key, value in el.attrib.items():
        if _local(key) == name:
            return value
    return None


def _safe_path(name: str) -> bool:
    if name.startswith("/") or "\\" in name or "\x00" in name:
        return False
    parts = name.split("/")
    return all(p not in ("", ".", "..") for p in parts)


def validate_package(data: bytes) -> ValidationReport:
    violations: list[Violation] = []

    def add(rule: str, path: str, detail: str = "") -> None:
        violations.append(Violation(rule=rule, doc_id="", path=path,
                                    detail=detail))

    def report() -> ValidationReport:
        ordered = sorted(violations, key=lambda v: (v.rule, v.path, v.detail))
        return ValidationReport(violations=tuple(ordered))

    try:
        zf = zipfile.ZipFile(io.BytesIO(data))
    except zipfile.BadZipFile as e:
        add("package-bad-zip", "", str(e))
        return report()
    with zf:
        names = zf.namelist()
        seen_names: set[str] = set()
        for name in names:
            if not _safe_path(name):
                add("package-bad-zip-path", name)
            if name in seen_names:
                add("package-duplicate-entry", name)
            seen_names.add(name)
        if "imsmanifest.xml" not in seen_names:
            add("package-missing-manifest", "imsmanifest.xml")
            return report()
        try:
            manifest = ET.fromstring(zf.read("imsmanifest.xml"))
        except ET.ParseError as e:
            add("package-bad-xml", "imsmanifest.xml", str(e))
            return report()

        if _local(manifest.tag) != "manifest":
            add("package-bad-xml", "imsmanifest.xml",
                f"root element is {_local(manifest.tag)!r}, not manifest")
            return report()

        # --- metadata: declared schema + version
        schema_name = schema_version = None
        for metadata in manifest:
            if _local(metadata.tag) != "metadata":
                continue
            for child in metadata:
                if _local(child.tag) == "schema":
                    schema_name = (child.text or "").strip()
                elif _local(child.tag) == "schemaversion":
                    schema_version = (child.text or "").strip()
        if schema_name is None or schema_version is None:
            add("package-missing-schema", "metadata",
                "schema and schemaversion are required")
        elif schema_name == "ADL SCORM" and schema_version != "1.2":
            add("package-bad-schemaversion", "metadata",
                f"ADL SCORM version must be 1.2, found {schema_version!r}")

        # --- collect identifiers, items, resources
        duplicate_ids: set[str] = set()
        all_ids: set[str] = set()

        def claim_id(identifier: str | None, where: str) -> None:
            if not identifier:
                add("package-missing-identifier", where)
                return
            if identifier in all_ids:
                duplicate_ids.add(identifier)
                add("package-duplicate-id", identifier, where)
            all_ids.add(identifier)

        organizations_el = None
        resources_el = None
        for child in manifest:
            if _local(child.tag) == "organizations":
                organizations_el = child
            elif _local(child.tag) == "resources":
                resources_el = child
        claim_id(_attr(manifest, "identifier"), "manifest")

        resource_ids: set[str] = set()
        referenced_files: set[str] = {"imsmanifest.xml"}
        if resources_el is None:
            add("package-missing-resources", "resources")
        else:
            for res in resources_el:
                if _local(res.tag) != "resource":
                    continue
                rid = _attr(res, "identifier")
                claim_id(rid, "resource")
                if rid:
                    resource_ids.add(rid)
                where = rid or "resource"
                scormtype = _attr(res, "scormtype")
                if scormtype is not None and scormtype not in ("sco", "asset"):
                    add("package-bad-scormtype", where, scormtype)
                href = _attr(res, "href")
                file_hrefs: set[str] = set()
                for child in res:
                    if _local(child.tag) == "file":
                        fh = _attr(child, "href")
                        if fh:
                            file_hrefs.add(fh)
                    elif _local(child.tag) == "dependency":
                        dep = _attr(child, "identifierref")
                        if dep:
                            file_hrefs.add(f"@dep:{dep}")
                for fh in sorted(file_hrefs):
                    if fh.startswith("@dep:"):
                        continue
                    clean = posixpath.normpath(fh.split("#", 1)[0].split("?", 1)[0])
                    referenced_files.add(clean)
                    if clean not in seen_names:
                        add("package-missing-file", clean,
                            f"listed by resource {where}")
                if href:
                    clean = posixpath.normpath(href.split("#", 1)[0].split("?", 1)[0])
                    referenced_files.add(clean)
                    if clean not in seen_names:
                        add("package-missing-file", clean,
                            f"href of resource {where}")
            # dependency references, second pass (need the full id set)
            for res in resources_el:
                if _local(res.tag) != "resource":
                    continue
                where = _attr(res, "identifier") or "resource"
                for child in res:
                    if _local(child.tag) == "dependency":
                        dep = _attr(child, "identifierref")
                        if dep and dep not in resource_ids:
                            add("package-dangling-dependency", where, dep)
                # files owned by dependencies count as referenced, which the
                # loop above already handled by charging them to the dependency
                # target's own file list.

        if organizations_el is None:
            add("package-missing-organizations", "organizations")
        else:
            default = _attr(organizations_el, "default")
            org_ids: set[str] = set()

            def walk_items(el: ET.Element, org_id: str) -> None:
                for item in el:
                    if _local(item.tag) != "item":
                        continue
                    claim_id(_attr(item, "identifier"), f"item in {org_id}")
                    ref = _attr(item, "identifierref")
                    if ref and ref not in resource_ids:
                        add("package-dangling-itemref",
                            _attr(item, "identifier") or "item", ref)
                    walk_items(item, org_id)

            for org in organizations_el:
                if _local(org.tag) != "organization":
                    continue
                oid = _attr(org, "identifier")
                claim_id(oid, "organization")
                if oid:
                    org_ids.add(oid)
                walk_items(org, oid or "organization")
            if not org_ids:
                add("package-missing-default-org", "organizations",
                    "no organization elements")
            elif default is None or default not in org_ids:
                add("package-missing-default-org", "organizations",
                    f"default={default!r}")

        for name in sorted(seen_names - referenced_files):
            add("package-orphan-file", name,
                "not referenced by any resource file list")
    return report()
