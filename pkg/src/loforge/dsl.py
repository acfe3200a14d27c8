"""Line-oriented script language for curation ops.

One op per line; `#` starts a comment; names with spaces are double-quoted.
Keywords are case-sensitive and lowercase. print/parse are exact inverses:
parse_script(print_script(s)) yields a script with identical ops.

    rename /Case/Dx as Diagnosis
    remove /Case/ImageList/Image/Technical
    merge /Case/DiseaseDiscussion into /Case/Discussion
    move /Case/ACRCode under /Case/Diagnosis at 2
    group /Case/Sex, /Case/Age as "Personal Data"
    set case-001 /Case/Title "CNS lymphoma"
    insert case-001 /Case/ImageList /Case/ImageList/Image
    link case-001 /Case/Topics doc topic-01
    annotate 4be97343ef121c4d 120,80,40,30 "ring-enhancing lesion" by "jmr"
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .model import LinkTarget, Mcq, LINK_ANNOTATION, LINK_DOCUMENT, LINK_EXTERNAL
from .ops import (
    AnnotateOp,
    CurationOp,
    EmptyPayload,
    GroupOp,
    ImportEvent,
    InsertOp,
    InsertPayload,
    LinkOp,
    LinkPayload,
    MergeOp,
    MoveOp,
    QuizPayload,
    RemoveOp,
    RenameOp,
    ResourcePayload,
    SetValueOp,
    TextPayload,
)
from .paths import (
    PathError,
    format_instance_path,
    format_name,
    format_path,
    parse_instance_path,
    parse_path,
)


class DslError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class CurationScript:
    ops: tuple[CurationOp, ...]
    source: str = field(default="", compare=False)

    def __len__(self) -> int:
        return len(self.ops)


# ---------------------------------------------------------------------------
# Tokenizer

WORD = "word"
STRING = "string"
PATH = "path"
COMMA = "comma"

_BARE = re.compile(r"[A-Za-z0-9._:-]+")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    col: int  # 1-based


def _scan_string(line: str, i: int, lineno: int) -> tuple[str, int]:
    """Read a double-quoted string starting at line[i] == '\"'; supports
    backslash escapes for '\"' and '\\'. Returns (value, next index)."""
    out: list[str] = []
    j = i + 1
    while j < len(line):
        ch = line[j]
        if ch == "\\" and j + 1 < len(line) and line[j + 1] in '"\\':
            out.append(line[j + 1])
            j += 2
        elif ch == '"':
            return "".join(out), j + 1
        else:
            out.append(ch)
            j += 1
    raise DslError("unterminated string", lineno, i + 1)


def _tokenize(line: str, lineno: int) -> list[Token]:
    toks: list[Token] = []
    i = 0
    n = len(line)
    while i < n:
        ch = line[i]
        if ch in " \t":
            i += 1
        elif ch == "#":
            break
        elif ch == ",":
            toks.append(Token(COMMA, ",", i + 1))
            i += 1
        elif ch == '"':
            value, j = _scan_string(line, i, lineno)
            toks.append(Token(STRING, value, i + 1))
            i = j
        elif ch == "/":
            start = i
            j = i
            while j < n:
                c = line[j]
                if c == '"':
                    _, j = _scan_string(line, j, lineno)
                elif c in " \t,#":
                    break
                else:
                    j += 1
            toks.append(Token(PATH, line[start:j], start + 1))
            i = j
        else:
            m = _BARE.match(line, i)
            if not m:
                raise DslError(f"unexpected character {ch!r}", lineno, i + 1)
            toks.append(Token(WORD, m.group(), i + 1))
            i = m.end()
    return toks


# ---------------------------------------------------------------------------
# Parser

class _Stream:
    def __init__(self, toks: list[Token], lineno: int, line_len: int):
        self.toks = toks
        self.lineno = lineno
        self.end_col = line_len + 1
        self.pos = 0

    def peek(self) -> Token | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def done(self) -> bool:
        return self.pos >= len(self.toks)

    def fail(self, message: str) -> DslError:
        tok = self.peek()
        col = tok.col if tok else self.end_col
        return DslError(message, self.lineno, col)

    def take(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            raise self.fail(f"expected {what}")
        self.pos += 1
        return tok

    def keyword(self, word: str) -> None:
        tok = self.peek()
        if tok is None or tok.kind != WORD or tok.text != word:
            raise self.fail(f"expected keyword {word!r}")
        self.pos += 1

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == WORD and tok.text == word

    def name(self) -> str:
        tok = self.peek()
        if tok is None or tok.kind not in (WORD, STRING):
            raise self.fail("expected a name")
        self.pos += 1
        return tok.text

    def atom(self) -> str:
        """Identifier-ish value: bare word or quoted string."""
        return self.name()

    def string(self) -> str:
        return self.take(STRING, "a quoted string").text

    def integer(self) -> int:
        tok = self.take(WORD, "an integer")
        if not tok.text.isdigit():
            raise DslError(f"expected an integer, got {tok.text!r}", self.lineno, tok.col)
        return int(tok.text)

    def path(self):
        tok = self.take(PATH, "an element path (starting with /)")
        try:
            return parse_path(tok.text)
        except PathError as e:
            raise DslError(str(e), self.lineno, tok.col) from e

    def instance_path(self):
        tok = self.take(PATH, "an instance path (starting with /)")
        try:
            return parse_instance_path(tok.text)
        except PathError as e:
            raise DslError(str(e), self.lineno, tok.col) from e


_LINK_KINDS = {"doc": LINK_DOCUMENT, "ann": LINK_ANNOTATION, "url": LINK_EXTERNAL}
_LINK_WORDS = {v: k for k, v in _LINK_KINDS.items()}


def _parse_link_target(s: _Stream) -> LinkTarget:
    tok = s.take(WORD, "one of doc, ann, url")
    kind = _LINK_KINDS.get(tok.text)
    if kind is None:
        raise DslError(f"expected doc, ann or url, got {tok.text!r}", s.lineno, tok.col)
    value = s.string() if tok.text == "url" else s.atom()
    return LinkTarget(kind, value)


def _parse_payload(s: _Stream) -> InsertPayload:
    if s.done():
        return EmptyPayload()
    tok = s.take(WORD, "a payload keyword (text, resource, doc, ann, url, quiz)")
    if tok.text == "text":
        return TextPayload(s.string())
    if tok.text == "resource":
        return ResourcePayload(s.atom())
    if tok.text in ("doc", "ann", "url"):
        s.pos -= 1
        return LinkPayload(_parse_link_target(s))
    if tok.text == "quiz":
        stem = s.string()
        s.keyword("choices")
        choices = [s.string()]
        while s.peek() is not None and s.peek().kind == COMMA:
            s.pos += 1
            choices.append(s.string())
        s.keyword("correct")
        correct = s.integer()
        explanation = ""
        if s.at_keyword("explain"):
            s.pos += 1
            explanation = s.string()
        return QuizPayload(Mcq(stem, tuple(choices), correct, explanation))
    raise DslError(f"unknown payload keyword {tok.text!r}", s.lineno, tok.col)


def _parse_line(toks: list[Token], lineno: int, line_len: int) -> CurationOp:
    s = _Stream(toks, lineno, line_len)
    head = s.take(WORD, "an op keyword")
    op: CurationOp
    if head.text == "rename":
        path = s.path()
        s.keyword("as")
        op = RenameOp(path, s.name())
    elif head.text == "remove":
        op = RemoveOp(s.path())
    elif head.text == "merge":
        source = s.path()
        s.keyword("into")
        target = s.path()
        new_name = None
        if s.at_keyword("as"):
            s.pos += 1
            new_name = s.name()
        op = MergeOp(source, target, new_name)
    elif head.text == "move":
        path = s.path()
        s.keyword("under")
        parent = s.path()
        index = None
        if s.at_keyword("at"):
            s.pos += 1
            index = s.integer()
        op = MoveOp(path, parent, index)
    elif head.text == "group":
        paths = [s.path()]
        while s.peek() is not None and s.peek().kind == COMMA:
            s.pos += 1
            paths.append(s.path())
        s.keyword("as")
        op = GroupOp(tuple(paths), s.name())
    elif head.text == "set":
        doc_id = s.atom()
        ipath = s.instance_path()
        op = SetValueOp(doc_id, ipath, s.string())
    elif head.text == "insert":
        doc_id = s.atom()
        parent = s.instance_path()
        type_path = s.path()
        op = InsertOp(doc_id, parent, type_path, _parse_payload(s))
    elif head.text == "link":
        doc_id = s.atom()
        parent = s.instance_path()
        op = LinkOp(doc_id, parent, _parse_link_target(s))
    elif head.text == "annotate":
        rid = s.atom()
        x = s.integer()
        s.take(COMMA, "','")
        y = s.integer()
        s.take(COMMA, "','")
        w = s.integer()
        s.take(COMMA, "','")
        h = s.integer()
        comment = s.string()
        author = ""
        if s.at_keyword("by"):
            s.pos += 1
            author = s.string()
        op = AnnotateOp(rid, x, y, w, h, comment, author)
    else:
        raise DslError(f"unknown op {head.text!r}", lineno, head.col)
    if not s.done():
        raise s.fail("unexpected trailing input")
    return op


def parse_script(text: str) -> CurationScript:
    """Parse a script, reporting the first error with line and column."""
    parsed: list[CurationOp] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        toks = _tokenize(line, lineno)
        if toks:
            parsed.append(_parse_line(toks, lineno, len(line)))
    return CurationScript(tuple(parsed), source=text)


# ---------------------------------------------------------------------------
# Printer

def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _atom(s: str) -> str:
    return s if _BARE.fullmatch(s) else _quote(s)


def _print_target(t: LinkTarget) -> str:
    word = _LINK_WORDS[t.kind]
    value = _quote(t.value) if word == "url" else _atom(t.value)
    return f"{word} {value}"


def _print_payload(p: InsertPayload) -> str:
    if isinstance(p, TextPayload):
        return f" text {_quote(p.text)}"
    if isinstance(p, ResourcePayload):
        return f" resource {_atom(p.resource_id)}"
    if isinstance(p, LinkPayload):
        return f" {_print_target(p.target)}"
    if isinstance(p, QuizPayload):
        q = p.quiz
        parts = f" quiz {_quote(q.stem)} choices "
        parts += ", ".join(_quote(ch) for ch in q.choices)
        parts += f" correct {q.correct_index}"
        if q.explanation:
            parts += f" explain {_quote(q.explanation)}"
        return parts
    return ""


def print_op(op: CurationOp) -> str:
    if isinstance(op, RenameOp):
        return f"rename {format_path(op.path)} as {format_name(op.new_name)}"
    if isinstance(op, RemoveOp):
        return f"remove {format_path(op.path)}"
    if isinstance(op, MergeOp):
        line = f"merge {format_path(op.source_path)} into {format_path(op.target_path)}"
        if op.new_name is not None:
            line += f" as {format_name(op.new_name)}"
        return line
    if isinstance(op, MoveOp):
        line = f"move {format_path(op.path)} under {format_path(op.new_parent_path)}"
        if op.index is not None:
            line += f" at {op.index}"
        return line
    if isinstance(op, GroupOp):
        return (f"group {', '.join(format_path(p) for p in op.paths)} "
                f"as {format_name(op.new_name)}")
    if isinstance(op, SetValueOp):
        return (f"set {_atom(op.doc_id)} {format_instance_path(op.instance_path)} "
                f"{_quote(op.text)}")
    if isinstance(op, InsertOp):
        return (f"insert {_atom(op.doc_id)} "
                f"{format_instance_path(op.parent_instance_path)} "
                f"{format_path(op.type_path)}{_print_payload(op.payload)}")
    if isinstance(op, LinkOp):
        return (f"link {_atom(op.doc_id)} "
                f"{format_instance_path(op.parent_instance_path)} "
                f"{_print_target(op.target)}")
    if isinstance(op, AnnotateOp):
        line = (f"annotate {_atom(op.resource_id)} {op.x},{op.y},{op.w},{op.h} "
                f"{_quote(op.comment)}")
        if op.author:
            line += f" by {_quote(op.author)}"
        return line
    raise ValueError(f"cannot print {type(op).__name__}")


def print_script(script: CurationScript | tuple[CurationOp, ...]) -> str:
    ops = getattr(script, "ops", script)
    return "".join(print_op(op) + "\n" for op in ops)


def print_log(records) -> str:
    """The op log as replayable script text; import events become comments."""
    lines: list[str] = []
    for rec in records:
        if isinstance(rec.entry, ImportEvent):
            params = " ".join(f"{k}={v}" for k, v in rec.entry.params)
            counts = " ".join(f"{k}={v}" for k, v in rec.entry.counts)
            detail = " ".join(x for x in (params, counts) if x)
            lines.append(f"# import {rec.entry.plugin} {detail}".rstrip())
        else:
            lines.append(print_op(rec.entry))
    return "".join(line + "\n" for line in lines)
