import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run tests marked slow")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running exact evaluations (enable with --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow") or os.environ.get("WIRETAPKIT_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="slow; enable with --runslow or WIRETAPKIT_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if not LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(LINES):
        terminalreporter.write_line(LINES[number])
