"""Export profiles: what to export and in which packaging flavor."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..model import Collection, KIND_QUIZ
from ..paths import ElementPath, format_path

FORMAT_IMSCP = "imscp"
FORMAT_SCORM12 = "scorm12"
FORMATS = (FORMAT_IMSCP, FORMAT_SCORM12)

DETAIL_FULL = "full"
DETAIL_SUMMARY = "summary"
DETAILS = (DETAIL_FULL, DETAIL_SUMMARY)


@dataclass(frozen=True)
class ExportProfile:
    """Selection and packaging options for one export run.

    selection: element paths to include (full detail only; empty = all).
    summary_paths: the fixed path set used when detail is "summary".
    document_filter: doc ids to include (None = every document).
    include_quizzes: render quiz elements (inline forms for imscp,
        separate self-scoring pages for scorm12).
    fixed_epoch: POSIX timestamp stamped on every archive member, making
        the zip byte-reproducible; None uses the current time.
    """

    format: str = FORMAT_IMSCP
    selection: tuple[ElementPath, ...] = ()
    summary_paths: tuple[ElementPath, ...] = ()
    document_filter: tuple[str, ...] | None = None
    detail: str = DETAIL_FULL
    include_quizzes: bool = False
    fixed_epoch: int | None = None
    title: str = "Curated collection"


def validate_profile(c: Collection, profile: ExportProfile) -> list[str]:
    """Problems that make this profile unusable against this collection."""
    errors: list[str] = []
    if profile.format not in FORMATS:
        errors.append(f"unknown format {profile.format!r}; use one of {FORMATS}")
    if profile.detail not in DETAILS:
        errors.append(f"unknown detail {profile.detail!r}; use one of {DETAILS}")
    if profile.detail == DETAIL_SUMMARY and not profile.summary_paths:
        errors.append("summary detail needs at least one summary path")
    for name, paths in (("selection", profile.selection),
                        ("summary path", profile.summary_paths)):
        for p in paths:
            if c.schema.find(p) is None:
                errors.append(f"{name} {format_path(p)} is not in the schema")
    if profile.document_filter is not None:
        if not profile.document_filter:
            errors.append("document filter selects no documents")
        for doc_id in profile.document_filter:
            if doc_id not in c.documents:
                errors.append(f"document filter names unknown document {doc_id!r}")
    if profile.fixed_epoch is not None and profile.fixed_epoch < 0:
        errors.append("fixed_epoch must be >= 0")
    if not profile.title.strip():
        errors.append("title must be non-empty")
    return errors


def selection_sets(c: Collection, profile: ExportProfile
                   ) -> tuple[frozenset[ElementPath], frozenset[ElementPath]]:
    """Resolve the profile to (rendered, container) path sets.

    Rendered paths appear as sections/values; container paths are
    ancestors that merely hold rendered content. Quiz-kind paths are
    managed by the quiz flag: they never render as sections, but when
    quizzes are on they (and their ancestors) are kept so quiz content
    survives filtering and appears in the dedicated quiz block.
    """
    all_paths = list(c.schema.paths())
    quiz_paths = {p for p in all_paths if c.schema.find(p).kind == KIND_QUIZ}
    base = profile.selection if profile.detail == DETAIL_FULL else profile.summary_paths
    if profile.detail == DETAIL_FULL and not base:
        chosen = set(all_paths)
    else:
        chosen = set()
        for sel in base:
            for p in all_paths:
                if p[:len(sel)] == sel:
                    chosen.add(p)
    if profile.include_quizzes:
        chosen |= quiz_paths
    else:
        chosen -= quiz_paths
        # drop composites that held nothing but quiz elements
        def only_quiz_leaves(p: ElementPath) -> bool:
            leaves = [q for q in all_paths
                      if q[:len(p)] == p and not c.schema.find(q).children]
            return bool(leaves) and all(q in quiz_paths for q in leaves)

        chosen = {p for p in chosen if not only_quiz_leaves(p)}
    containers: set[ElementPath] = set()
    for p in chosen:
        for i in range(1, len(p)):
            prefix = p[:i]
            if prefix not in chosen:
                containers.add(prefix)
    return frozenset(chosen), frozenset(containers)
