"""HTML rendering for exported packages.

Content pages walk the schema in declared order, so every run renders the
same bytes: sections carry ``data-path`` attributes, image resources get
annotation markers positioned in percent coordinates, internal links are
rewritten to sibling pages, and quiz elements either render as an inline
self-check block (content-package flavor) or as separate self-scoring
pages backed by an LMS runtime script (scorm flavor).
"""

from __future__ import annotations

import html
import json
from dataclasses import dataclass

from ..model import (
    Annotation,
    Collection,
    Document,
    ElementInstance,
    ElementType,
    KIND_COMPOSITE,
    KIND_QUIZ,
    LINK_ANNOTATION,
    LINK_DOCUMENT,
    LINK_EXTERNAL,
    Mcq,
    image_dimensions,
)
from ..paths import ElementPath, format_path
from .profile import ExportProfile, selection_sets


def esc(s: str) -> str:
    return html.escape(s, quote=True)


STYLE_CSS = """\
:root { color-scheme: light; }
body { margin: 0 auto; max-width: 52rem; padding: 1.5rem;
       font: 16px/1.55 Georgia, 'Times New Roman', serif; color: #1c2430;
       background: #fbfaf7; }
h1 { font-size: 1.6rem; border-bottom: 2px solid #9aa7b8; padding-bottom: .3rem; }
section.element { margin: 1rem 0; }
section.element > h2, section.element > h3, section.element > h4,
section.element > h5, section.element > h6 {
  margin: .8rem 0 .25rem; color: #2c3e50; font-family: Verdana, Geneva, sans-serif;
  font-size: 1.02rem; letter-spacing: .02em; }
p.value { margin: .2rem 0 .6rem; white-space: pre-wrap; }
div.instance + div.instance { border-top: 1px dotted #c4ccd6; margin-top: .6rem;
  padding-top: .6rem; }
figure.resource { margin: .8rem 0; }
figure.resource .image-wrap { position: relative; display: inline-block; }
figure.resource img { max-width: 100%; border: 1px solid #7e8aa0; display: block; }
figcaption { font-size: .85rem; color: #5d6b7e; margin-top: .25rem; }
.annotation-marker { position: absolute; border: 2px solid #e0a500;
  box-shadow: 0 0 0 1px rgba(0,0,0,.55); cursor: help; }
ul.annotations { font-size: .88rem; margin: .3rem 0 0; padding-left: 1.4rem; }
ul.annotations .author { color: #5d6b7e; }
a.doc-link { color: #1f5f99; }
a.external-link::after { content: " \\2197"; font-size: .8em; }
span.unresolved-link { color: #8a5a2d; border-bottom: 1px dashed #8a5a2d; }
.quiz-block, .quiz-page { margin-top: 1.6rem; border-top: 3px double #9aa7b8;
  padding-top: .8rem; }
fieldset.question { border: 1px solid #b9c2cf; margin: .8rem 0; padding: .6rem .9rem; }
fieldset.question legend { font-weight: bold; padding: 0 .4rem; }
fieldset.question label { display: block; margin: .2rem 0; }
fieldset.question.correct { border-color: #3c7a3c; background: #f1f7f1; }
fieldset.question.incorrect { border-color: #a04545; background: #faf2f2; }
.quiz-result { font-weight: bold; font-size: 1.05rem; }
.quiz-controls button { font: inherit; padding: .35rem 1.1rem; }
details.answer { font-size: .9rem; margin-top: .3rem; }
nav.page-nav { margin-top: 1.4rem; font-family: Verdana, Geneva, sans-serif;
  font-size: .9rem; }
"""


def document_title(c: Collection, doc: Document,
                   rendered: frozenset[ElementPath]) -> str:
    """First rendered atomic value in schema order, or the document id."""

    def walk(etype: ElementType, path: ElementPath,
             instances: list[ElementInstance]) -> str | None:
        for child_type in etype.children:
            child_path = path + (child_type.name,)
            matching = [ch for inst in instances
                        for ch in (inst.children or ())
                        if ch.name == child_type.name]
            if not matching:
                continue
            if child_type.kind == KIND_COMPOSITE:
                found = walk(child_type, child_path, matching)
                if found:
                    return found
            elif child_path in rendered:
                for inst in matching:
                    if inst.text:
                        return inst.text
        return None

    title = walk(c.schema.root, (), [doc.root])
    return (title or doc.id)[:160]


# ---------------------------------------------------------------------------
# Content pages

@dataclass
class _RenderState:
    assets: list[str]
    doc_ids: frozenset[str]
    annotations_by_resource: dict[str, list[Annotation]]


def _render_annotation_items(anns: list[Annotation]) -> str:
    items = []
    for a in anns:
        author = f' <span class="author">({esc(a.author)})</span>' if a.author else ""
        items.append(f'<li id="ann-{esc(a.id)}">{esc(a.comment)}{author}</li>')
    return f'<ul class="annotations">{"".join(items)}</ul>'


def _render_resource(c: Collection, inst: ElementInstance, path_attr: str,
                     state: _RenderState) -> str:
    res = c.resources[inst.resource_id]
    if res.id not in state.assets:
        state.assets.append(res.id)
    if res.kind == "local-file" and res.media_type.startswith("image/"):
        markers = []
        anns = state.annotations_by_resource.get(res.id, [])
        dims = image_dimensions(c.resource_bytes.get(res.id, b""))
        if dims and anns:
            width, height = dims
            for a in anns:
                style = (f"left:{100 * a.x / width:.4f}%;"
                         f"top:{100 * a.y / height:.4f}%;"
                         f"width:{100 * a.w / width:.4f}%;"
                         f"height:{100 * a.h / height:.4f}%")
                markers.append(
                    f'<span class="annotation-marker" data-annotation="{esc(a.id)}" '
                    f'style="{style}" title="{esc(a.comment)}"></span>')
        note_list = _render_annotation_items(anns) if anns else ""
        return (f'<figure class="resource" data-path="{path_attr}">'
                f'<div class="image-wrap">'
                f'<img src="{esc(res.locator)}" alt="{esc(res.id)}">'
                f'{"".join(markers)}</div>{note_list}</figure>')
    if res.kind == "local-file":
        return (f'<figure class="resource" data-path="{path_attr}">'
                f'<a href="{esc(res.locator)}">{esc(res.locator.rsplit("/", 1)[-1])}'
                f"</a></figure>")
    return (f'<figure class="resource" data-path="{path_attr}">'
            f'<a class="external-link" href="{esc(res.locator)}" rel="external">'
            f"{esc(res.locator)}</a></figure>")


def _render_link(c: Collection, inst: ElementInstance, path_attr: str,
                 state: _RenderState) -> str:
    target = inst.link
    if target.kind == LINK_DOCUMENT:
        if target.value in state.doc_ids:
            title = esc(target.value)
            return (f'<p class="value" data-path="{path_attr}">'
                    f'<a class="doc-link" href="{esc(target.value)}.html">'
                    f"{title}</a></p>")
        return (f'<p class="value" data-path="{path_attr}">'
                f'<span class="unresolved-link" data-target="{esc(target.value)}">'
                f"{esc(target.value)}</span></p>")
    if target.kind == LINK_ANNOTATION:
        ann = c.annotations.get(target.value)
        label = esc(ann.comment if ann else target.value)
        return (f'<p class="value" data-path="{path_attr}">'
                f'<a class="doc-link" href="#ann-{esc(target.value)}">{label}</a></p>')
    return (f'<p class="value" data-path="{path_attr}">'
            f'<a class="external-link" href="{esc(target.value)}" rel="external">'
            f"{esc(target.value)}</a></p>")


def _render_type(c: Collection, etype: ElementType, path: ElementPath,
                 instances: list[ElementInstance], depth: int,
                 rendered: frozenset, containers: frozenset,
                 state: _RenderState) -> str:
    if etype.kind == KIND_QUIZ:
        return ""  # quiz content renders in its own block/page
    in_render = path in rendered
    in_container = path in containers
    if path and not in_render and not in_container:
        return ""
    if not instances:
        return ""
    path_attr = esc(format_path(path))
    if etype.kind == KIND_COMPOSITE or not path:
        bodies = []
        for inst in instances:
            parts = []
            for child_type in etype.children:
                child_instances = [ch for ch in (inst.children or ())
                                   if ch.name == child_type.name]
                parts.append(_render_type(c, child_type, path + (child_type.name,),
                                          child_instances, depth + 1,
                                          rendered, containers, state))
            bodies.append("".join(parts))
        if not path:
            return "".join(bodies)
        if in_container:
            inner = "".join(f'<div class="container-instance">{b}</div>'
                            if len(bodies) > 1 else b for b in bodies)
            return f'<div class="container" data-path="{path_attr}">{inner}</div>'
        level = min(depth + 1, 6)
        inner = "".join(f'<div class="instance">{b}</div>' for b in bodies)
        return (f'<section class="element" data-path="{path_attr}">'
                f"<h{level}>{esc(etype.name)}</h{level}>{inner}</section>")
    out = []
    for inst in instances:
        if inst.text is not None:
            out.append(f'<p class="value" data-path="{path_attr}">{esc(inst.text)}</p>')
        elif inst.resource_id is not None:
            out.append(_render_resource(c, inst, path_attr, state))
        elif inst.link is not None:
            out.append(_render_link(c, inst, path_attr, state))
    return "".join(out)


def _quiz_instances(doc: Document) -> list[tuple[str, Mcq]]:
    found: list[tuple[str, Mcq]] = []

    def walk(inst: ElementInstance, path: tuple[str, ...]) -> None:
        if inst.quiz is not None:
            found.append((format_path(path), inst.quiz))
        for ch in inst.children or ():
            walk(ch, path + (ch.name,))

    for ch in doc.root.children or ():
        walk(ch, (ch.name,))
    return found


def _render_inline_quiz(questions: list[tuple[str, Mcq]]) -> str:
    blocks = []
    for i, (path_attr, q) in enumerate(questions):
        choices = "".join(
            f'<label><input type="radio" name="q{i}" value="{j}"> {esc(ch)}</label>'
            for j, ch in enumerate(q.choices))
        answer = esc(q.choices[q.correct_index])
        explanation = f" {esc(q.explanation)}" if q.explanation else ""
        blocks.append(
            f'<fieldset class="question" data-path="{esc(path_attr)}" data-q="{i}">'
            f"<legend>{esc(q.stem)}</legend>{choices}"
            f'<details class="answer"><summary>Show answer</summary>'
            f"<p>{answer}.{explanation}</p></details></fieldset>")
    return ('<div class="quiz-block"><h2>Quiz</h2>'
            f'<form class="quiz">{"".join(blocks)}</form></div>')


def _page(title: str, body: str, scripts: tuple[str, ...] = ()) -> str:
    script_tags = "".join(f'<script src="{esc(s)}"></script>' for s in scripts)
    return (
        "<!DOCTYPE html>\n"
        '<html lang="en">\n<head>\n<meta charset="utf-8">\n'
        '<meta name="viewport" content="width=device-width, initial-scale=1">\n'
        f"<title>{esc(title)}</title>\n"
        '<link rel="stylesheet" href="style.css">\n'
        "</head>\n<body>\n"
        f"{body}\n{script_tags}</body>\n</html>\n"
    )


def render_document_html(c: Collection, doc_id: str, profile: ExportProfile,
                         exported_doc_ids: frozenset[str] = frozenset(),
                         inline_quiz: bool | None = None,
                         quiz_href: str | None = None) -> tuple[str, tuple[str, ...]]:
    """Render one document page.

    Returns (html, referenced resource ids). Only rendered paths appear,
    each instance exactly once, in schema order. When quizzes are on,
    imscp pages embed an inline self-check block; scorm pages link to
    their separate quiz page instead (quiz_href).
    """
    doc = c.documents[doc_id]
    rendered, containers = selection_sets(c, profile)
    anns: dict[str, list[Annotation]] = {}
    for aid in sorted(c.annotations):
        a = c.annotations[aid]
        anns.setdefault(a.resource_id, []).append(a)
    state = _RenderState(assets=[], doc_ids=exported_doc_ids or frozenset({doc_id}),
                         annotations_by_resource=anns)
    body = _render_type(c, c.schema.root, (), [doc.root], 0,
                        rendered, containers, state)
    title = document_title(c, doc, rendered)
    parts = [f'<article class="document" data-doc="{esc(doc_id)}">',
             f"<h1>{esc(title)}</h1>", body]
    if inline_quiz is None:
        inline_quiz = profile.include_quizzes and profile.format == "imscp"
    questions = _quiz_instances(doc) if profile.include_quizzes else []
    if inline_quiz and questions:
        parts.append(_render_inline_quiz(questions))
    if quiz_href and questions:
        parts.append(f'<nav class="page-nav"><a href="{esc(quiz_href)}">'
                     "Self-assessment quiz</a></nav>")
    parts.append("</article>")
    return _page(title, "".join(parts)), tuple(state.assets)


# ---------------------------------------------------------------------------
# Quiz pages + LMS runtime (scorm flavor)

QUIZ_RUNTIME_JS = """\
(function () {
  "use strict";
  var KEY = __KEY__;
  var api = null;
  var initialized = false;
  var finished = false;

  function findApi(win) {
    var tries = 0;
    while (win && tries < 100) {
      if (win.API) { return win.API; }
      if (win.parent && win.parent !== win) { win = win.parent; }
      else if (win.opener) { win = win.opener; }
      else { break; }
      tries += 1;
    }
    return null;
  }

  function initialize() {
    if (initialized) { return; }
    api = findApi(window);
    if (api) { api.LMSInitialize(""); }
    initialized = true;
  }

  function chosenAnswers() {
    var out = [];
    for (var i = 0; i < KEY.length; i += 1) {
      var el = document.querySelector('input[name="q' + i + '"]:checked');
      out.push(el ? parseInt(el.value, 10) : -1);
    }
    return out;
  }

  function markQuestion(i, good) {
    var fs = document.querySelector('fieldset[data-q="' + i + '"]');
    if (fs) { fs.className = "question " + (good ? "correct" : "incorrect"); }
  }

  function submitQuiz(answers) {
    if (finished) { return null; }
    if (!initialized) { initialize(); }
    if (!answers) { answers = chosenAnswers(); }
    var total = KEY.length;
    var correct = 0;
    for (var i = 0; i < total; i += 1) {
      var good = answers[i] === KEY[i].correct;
      if (good) { correct += 1; }
      if (typeof document !== "undefined" && document.querySelector) {
        markQuestion(i, good);
      }
    }
    var score = Math.round(100 * correct / total);
    if (api) {
      api.LMSSetValue("cmi.core.score.raw", String(score));
      api.LMSSetValue("cmi.core.score.min", "0");
      api.LMSSetValue("cmi.core.score.max", "100");
      api.LMSSetValue("cmi.core.lesson.status", "completed");
      api.LMSCommit("");
      api.LMSFinish("");
    }
    finished = true;
    if (typeof document !== "undefined" && document.querySelector) {
      var box = document.querySelector(".quiz-result");
      if (box) {
        box.textContent = "Score: " + score + "% (" + correct + " of " +
          total + " correct)";
      }
    }
    return score;
  }

  var root = (typeof window !== "undefined") ? window : this;
  root.quizRuntime = {
    submitQuiz: submitQuiz,
    initialize: initialize,
    findApi: findApi
  };
  if (typeof window !== "undefined" && typeof document !== "undefined" &&
      document.addEventListener) {
    if (document.readyState === "loading") {
      document.addEventListener("DOMContentLoaded", initialize);
    } else {
      initialize();
    }
  } else {
    initialize();
  }
}).call(this);
"""


def render_quiz_runtime(questions: list[tuple[str, Mcq]]) -> str:
    key = [{"correct": q.correct_index,
            "explanation": q.explanation} for _, q in questions]
    key_js = json.dumps(key, sort_keys=True).replace("</", "<\\/")
    return QUIZ_RUNTIME_JS.replace("__KEY__", key_js)


def render_quiz_page(c: Collection, doc_id: str, title: str,
                     questions: list[tuple[str, Mcq]], script_name: str) -> str:
    blocks = []
    for i, (path_attr, q) in enumerate(questions):
        choices = "".join(
            f'<label><input type="radio" name="q{i}" value="{j}"> {esc(ch)}</label>'
            for j, ch in enumerate(q.choices))
        blocks.append(
            f'<fieldset class="question" data-path="{esc(path_attr)}" data-q="{i}">'
            f"<legend>{esc(q.stem)}</legend>{choices}</fieldset>")
    body = (
        f'<article class="quiz-page" data-doc="{esc(doc_id)}">'
        f"<h1>{esc(title)}: self-assessment</h1>"
        f'<form class="quiz" onsubmit="return false">{"".join(blocks)}'
        '<div class="quiz-controls">'
        '<button type="button" onclick="quizRuntime.submitQuiz()">'
        "Submit answers</button></div>"
        '<p class="quiz-result" aria-live="polite"></p>'
        "</form>"
        f'<nav class="page-nav"><a href="{esc(doc_id)}.html">Back to case</a></nav>'
        "</article>")
    return _page(f"{title}: self-assessment", body, scripts=(script_name,))
