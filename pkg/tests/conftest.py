from __future__ import annotations

import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "qadvdiff", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("qadvdiff")


def pytest_addoption(parser):
    parser.addoption("--allow-long", action="store_true", default=False,
                     help="run full-scale reproduction runs (hours of CPU)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--allow-long") or os.environ.get("QADVDIFF_ALLOW_LONG"):
        return
    skip = pytest.mark.skip(reason="full-scale run; pass --allow-long or set QADVDIFF_ALLOW_LONG=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)



def pytest_terminal_summary(terminalreporter):
    from _util import ACCEPTANCE
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
