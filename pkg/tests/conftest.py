"""Shared fixtures: the bundled sample source imported once per session.

Collections are immutable snapshots, so sharing them across tests is
safe; tests derive new snapshots instead of mutating.
"""

from __future__ import annotations

import shutil
import sys
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent
FIXTURE_DIR = REPO / "fixtures" / "medpix"
CURATION_SCRIPT = REPO / "fixtures" / "medpix_curation.cdsl"

sys.path.insert(0, str(Path(__file__).resolve().parent))


@pytest.fixture(scope="session")
def fixture_base() -> str:
    return FIXTURE_DIR.resolve().as_uri() + "/"


@pytest.fixture(scope="session")
def curation_text() -> str:
    return CURATION_SCRIPT.read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def imported(fixture_base):
    """Fresh import of the bundled sample (12 cases + linked topics)."""
    from loforge.importing import run_import
    from loforge.model import Collection

    c, report = run_import(Collection.empty(), "medpix",
                           {"base": fixture_base})
    assert not report.errors, report.errors
    return c


@pytest.fixture(scope="session")
def curated(imported, curation_text):
    """The imported sample after the bundled curation script."""
    from loforge import dsl, ops

    script = dsl.parse_script(curation_text)
    result = ops.apply_script(imported, script)
    assert result.ok, [o.error for o in result.outcomes if not o.ok]
    return result.collection


def require_node() -> str:
    node = shutil.which("node")
    if node is None:
        pytest.skip("node is not installed")
    return node
