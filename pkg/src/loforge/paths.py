"""Element-path and instance-path handling.

Two path flavors are used throughout:

* element paths (``/Case/Diagnosis/Primary``) name a type in the schema
  tree, root excluded; represented as a tuple of name segments.
* instance paths add an optional 0-based sibling ordinal per segment
  (``/Case/ImageList/Image[1]/Caption``) to address one instance inside a
  document. A bare segment means "the only instance of that type here".

Names may contain spaces; segments containing characters that would break
the textual form are double-quoted when printed.
"""

from __future__ import annotations

ElementPath = tuple[str, ...]
# (name, ordinal); ordinal None = "the only sibling of this type"
InstanceStep = tuple[str, int | None]
InstancePath = tuple[InstanceStep, ...]


class PathError(ValueError):
    """Malformed path text or invalid element-type name."""


def check_name(name: str) -> str:
    """Validate an element-type name; returns it unchanged."""
    if not name:
        raise PathError("element name must be non-empty")
    if name != name.strip():
        raise PathError(f"element name has leading/trailing whitespace: {name!r}")
    if "/" in name or '"' in name:
        raise PathError(f"element name may not contain '/' or '\"': {name!r}")
    return name


def _needs_quoting(name: str) -> bool:
    if any(ch.isspace() for ch in name):
        return True
    return any(ch in name for ch in ",[]#")


def format_name(name: str) -> str:
    return f'"{name}"' if _needs_quoting(name) else name


def format_path(path: ElementPath) -> str:
    if not path:
        return "/"
    return "".join("/" + format_name(seg) for seg in path)


def format_instance_path(ipath: InstancePath) -> str:
    if not ipath:
        return "/"
    out = []
    for name, ordinal in ipath:
        seg = format_name(name)
        if ordinal is not None:
            seg += f"[{ordinal}]"
        out.append("/" + seg)
    return "".join(out)


def _scan_segment(text: str, i: int) -> tuple[str, int]:
    """Read one name segment starting at text[i]; returns (name, next index)."""
    if i < len(text) and text[i] == '"':
        j = text.find('"', i + 1)
        if j < 0:
            raise PathError(f"unterminated quote in path: {text!r}")
        name = text[i + 1 : j]
        return name, j + 1
    j = i
    while j < len(text) and text[j] not in "/[":
        j += 1
    return text[i:j], j


def parse_path(text: str) -> ElementPath:
    """Parse ``/Name/Name`` into a segment tuple. ``/`` alone is the root."""
    text = text.strip()
    if text == "/":
        return ()
    if not text.startswith("/"):
        raise PathError(f"path must start with '/': {text!r}")
    segs: list[str] = []
    i = 1
    while i <= len(text):
        name, i = _scan_segment(text, i)
        segs.append(check_name(name))
        if i == len(text):
            break
        if text[i] != "/":
            raise PathError(f"unexpected {text[i]!r} at column {i + 1} in path {text!r}")
        i += 1
    if not segs:
        raise PathError(f"empty path: {text!r}")
    return tuple(segs)


def parse_instance_path(text: str) -> InstancePath:
    """Parse ``/Name[0]/Name`` into ((name, ordinal|None), ...)."""
    text = text.strip()
    if text == "/":
        return ()
    if not text.startswith("/"):
        raise PathError(f"instance path must start with '/': {text!r}")
    steps: list[InstanceStep] = []
    i = 1
    while i <= len(text):
        name, i = _scan_segment(text, i)
        check_name(name)
        ordinal: int | None = None
        if i < len(text) and text[i] == "[":
            j = text.find("]", i)
            if j < 0:
                raise PathError(f"unterminated '[' in instance path: {text!r}")
            num = text[i + 1 : j]
            if not num.isdigit():
                raise PathError(f"ordinal must be a non-negative integer: {num!r}")
            ordinal = int(num)
            i = j + 1
        steps.append((name, ordinal))
        if i == len(text):
            break
        if text[i] != "/":
            raise PathError(f"unexpected {text[i]!r} at column {i + 1} in {text!r}")
        i += 1
    return tuple(steps)


def element_path_of(ipath: InstancePath) -> ElementPath:
    return tuple(name for name, _ in ipath)


def is_prefix(prefix: ElementPath, path: ElementPath) -> bool:
    return len(prefix) <= len(path) and path[: len(prefix)] == prefix
