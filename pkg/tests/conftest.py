import os
from pathlib import Path

import numpy as np
import pytest

from suco.core import Dataset
from suco.datasets import sift_like
from suco.index import Imi
from suco.io import hold_out_queries, load_dataset, load_queries

SIFTSMALL_ENV = "SUCO_SIFTSMALL"


def siftsmall_dir() -> Path | None:
    """Directory holding siftsmall_base.fvecs / siftsmall_query.fvecs, if configured."""
    raw = os.environ.get(SIFTSMALL_ENV)
    if not raw:
        return None
    path = Path(raw)
    if (path / "siftsmall_base.fvecs").exists() and (path / "siftsmall_query.fvecs").exists():
        return path
    return None


@pytest.fixture(scope="session")
def siftsmall():
    path = siftsmall_dir()
    if path is None:
        pytest.skip(f"siftsmall corpus not available (set {SIFTSMALL_ENV})")
    base = load_dataset(path / "siftsmall_base.fvecs")
    return base, load_queries(path / "siftsmall_query.fvecs", base.d)


@pytest.fixture(scope="session")
def surrogate():
    """SIFT-shaped stand-in: 10K base points, 100 held-out queries, d=128."""
    split = hold_out_queries(Dataset(sift_like(10_100, seed=1)), 100, seed=0)
    return split.base, split.queries


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_instance(rng, k_half, n=None):
    """Random IMI plus two random centroid-distance vectors for traversal tests."""
    n = n if n is not None else int(rng.integers(1, 4 * k_half * k_half + 2))
    cells = rng.integers(k_half * k_half, size=n)
    imi = Imi.from_assignments(cells // k_half, cells % k_half, k_half)
    # coarse grid values force plenty of exact ties between sums
    d1 = rng.integers(0, 6, size=k_half) / 4.0
    d2 = rng.integers(0, 6, size=k_half) / 4.0
    if rng.random() < 0.5:
        d1 = d1 + rng.random(k_half)
        d2 = d2 + rng.random(k_half)
    return imi, n, d1, d2


# one summary line per acceptance criterion ------------------------------

_CRITERIA: list[tuple[str, str, str]] = []


@pytest.fixture
def note(request):
    """Attach a short measurement to the acceptance line of this test."""
    lines = []
    request.node.user_properties.append(("note", lines))
    return lines.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        notes = [n for key, vals in item.user_properties if key == "note" for n in vals]
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        soft = item.get_closest_marker("soft")
        if soft is not None and rep.outcome == "passed":
            status = "REPORTED"
        if rep.outcome == "skipped" and isinstance(rep.longrepr, tuple):
            notes.append(rep.longrepr[2].removeprefix("Skipped: "))
        _CRITERIA.append((marker.args[0], status, "; ".join(notes)))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, status, detail in _CRITERIA:
        terminalreporter.write_line(f"{status:8s} {label}" + (f"  [{detail}]" if detail else ""))
