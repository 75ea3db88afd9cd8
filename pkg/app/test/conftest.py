import os

import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running census checks, run with TORIC_RUN_SLOW=1")


def pytest_collection_modifyitems(config, items):
    if os.getenv("TORIC_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set TORIC_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
