import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
DATA = TESTS / "data"
sys.path.insert(0, str(TESTS))

SAMPLE_ID = "ap~20091016-3323000"


def read(name):
    return (DATA / name).read_text(encoding="utf-8")


@pytest.fixture
def sample():
    return read(SAMPLE_ID + ".ann"), read(SAMPLE_ID + ".txt")


@pytest.fixture
def data_dir():
    return DATA


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    setattr(item, "rep_" + rep.when, rep)
