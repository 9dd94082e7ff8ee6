import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthetic import write_season  # noqa: E402
from xgsim.pipeline import load_season  # noqa: E402

DATA_DIR_ENV = "XGSIM_DATA_DIR"


@pytest.fixture(scope="session")
def synthetic_files(tmp_path_factory):
    """(matches_path, events_path, truth) of a two-league synthetic file pair."""
    return write_season(tmp_path_factory.mktemp("synthetic"), seed=7, other_league=True)


@pytest.fixture(scope="session")
def synthetic_season(synthetic_files):
    m, e, _ = synthetic_files
    return load_season(m, e, league="E0", season="2016")


def epl_paths():
    """Paths of the real 2015/16 files, or None when they are not available."""
    d = os.environ.get(DATA_DIR_ENV)
    if not d:
        return None
    m, e = Path(d) / "ginf.csv", Path(d) / "events.csv"
    return (m, e) if m.is_file() and e.is_file() else None


_acceptance = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "_acceptance", None)
    if marker is None:
        return
    num, title = marker
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        reason = ""
        if report.skipped and isinstance(report.longrepr, tuple):
            reason = report.longrepr[2].removeprefix("Skipped: ")
        prev = _acceptance.get(report.nodeid)
        if prev is None or prev[2] != "FAIL":
            _acceptance[report.nodeid] = (num, title, status, reason)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is not None:
        rep._acceptance = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, status, reason in sorted(_acceptance.values()):
        line = f"[{status}] criterion {num}: {title}"
        if reason:
            line += f"  ({reason})"
        terminalreporter.write_line(line)
