import functools

import pytest

from torsionlab.support import disk, ellipse, random_body
from torsionlab.torsion import compute_bundle

FINE = 1 / 128
COARSE = 1 / 64


@functools.lru_cache(maxsize=None)
def bundle_for(kind, arg, delta):
    if kind == "disk":
        body = disk(arg)
    elif kind == "ellipse":
        body = ellipse(*arg)
    else:
        body = random_body(arg)
    return compute_bundle(body, delta)


@pytest.fixture(scope="session")
def disk_bundle():
    return bundle_for("disk", 1.0, FINE)


@pytest.fixture(scope="session")
def ellipse_bundle():
    return bundle_for("ellipse", (2.0, 1.0), FINE)


@pytest.fixture(scope="session")
def random_bundle():
    return bundle_for("random", 3, FINE)


# one PASS/FAIL line per acceptance criterion in the terminal summary
_CRITERIA = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("detail", "")
        _CRITERIA[report.nodeid.split("::")[-1]] = (report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        outcome, detail = _CRITERIA[name]
        num = int(name.split("_")[2])
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {verdict}  {detail}")
