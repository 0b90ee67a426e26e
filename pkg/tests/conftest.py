"""Shared fixtures and the acceptance-criterion summary."""
from __future__ import annotations

from collections import OrderedDict
from pathlib import Path

import numpy as np
import pytest

from thinheat.surface_geometry import circle, ellipse, growing_circle

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

_CRITERIA: "OrderedDict[int, dict]" = OrderedDict()


def pytest_collection_modifyitems(config, items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m is not None:
            num, title = m.args
            entry = _CRITERIA.setdefault(num, {"title": title, "outcomes": []})
            entry["title"] = title


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is None:
        return
    num = m.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _CRITERIA[num]["outcomes"].append(rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        entry = _CRITERIA[num]
        outs = entry["outcomes"]
        if not outs:
            status = "NOT RUN"
        elif all(o == "passed" for o in outs):
            status = "PASS"
        else:
            status = "FAIL"
        tr.write_line(f"{status} criterion {num}: {entry['title']} ({len(outs)} checks)")


# fixtures ----------------------------------------------------------------------

@pytest.fixture(scope="session")
def unit_circle():
    fam = circle()
    fam.tubular((0.0, 1.0))
    return fam


@pytest.fixture(scope="session")
def grow_circle():
    fam = growing_circle(1.0, 0.5)
    fam.tubular((0.0, 1.0))
    return fam


@pytest.fixture(scope="session")
def moving_ellipse():
    fam = ellipse()
    fam.tubular((0.0, 1.0))
    return fam


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
