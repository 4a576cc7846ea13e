import logging

import pytest

from aeelm.config import PipelineConfig
from aeelm.synthplant import PlantSpec, generate

_CRITERIA = {}
N_CRITERIA = 10


@pytest.fixture(autouse=True)
def _quiet_clip_warnings():
    logging.getLogger("aeelm").setLevel(logging.ERROR)
    yield
    logging.getLogger("aeelm").setLevel(logging.NOTSET)


@pytest.fixture(scope="session")
def default_plant():
    """(dataset, truth) of the default synthetic plant at seed 42."""
    return generate(PlantSpec())


@pytest.fixture(scope="session")
def default_config():
    return PipelineConfig()


@pytest.fixture(scope="session")
def default_ablation(default_config):
    from aeelm.pipeline import run_ablation

    logging.getLogger("aeelm").setLevel(logging.ERROR)
    return run_ablation(default_config)


@pytest.fixture
def record_criterion():
    """Log a pass/fail line for an acceptance criterion; returns ``ok``."""

    def record(number, title, ok, detail=""):
        _CRITERIA[number] = (title, bool(ok), detail)
        status = "PASS" if ok else "FAIL"
        print(f"criterion {number:2d} {status}: {title} [{detail}]")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        if n in _CRITERIA:
            title, ok, detail = _CRITERIA[n]
            terminalreporter.write_line(
                f"criterion {n:2d} {'PASS' if ok else 'FAIL'}: {title} [{detail}]")
        else:
            terminalreporter.write_line(f"criterion {n:2d} NOT RUN")
