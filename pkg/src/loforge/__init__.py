"""loforge: curate heterogeneous record collections and ship them as
portable learning-object packages.

Importers pull records from REST endpoints, JSON/CSV files, or previously
exported packages; a small op algebra (rename / remove / merge / move /
group, plus per-document edits) reshapes the inferred schema while keeping
every document conformant; exporters emit deterministic IMS Content Package
and SCORM 1.2 archives with self-scoring quizzes.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    Annotation,
    Collection,
    Document,
    ElementInstance,
    ElementType,
    InvalidCollection,
    LinkTarget,
    Mcq,
    ModelError,
    Origin,
    Resource,
    Schema,
    ValidationReport,
    Violation,
    annotation_id,
    content_id,
    validate_collection,
)
from .ops import OpError, apply_op, apply_script  # noqa: F401
from .dsl import CurationScript, DslError, parse_script, print_script  # noqa: F401
