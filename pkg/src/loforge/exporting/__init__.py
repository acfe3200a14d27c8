"""Deterministic package exporters (IMS content packages and SCORM 1.2)."""

from .profile import (  # noqa: F401
    DETAIL_FULL,
    DETAIL_SUMMARY,
    DETAILS,
    FORMAT_IMSCP,
    FORMAT_SCORM12,
    FORMATS,
    ExportProfile,
    selection_sets,
    validate_profile,
)
from .package import (  # noqa: F401
    ExportError,
    build_package,
    export_package,
    filter_document,
)
from .render import document_title, render_document_html  # noqa: F401
from .validate import validate_package  # noqa: F401
