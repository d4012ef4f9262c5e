import numpy as np
import pytest

from crowdflow.core import CentroidSet, FrameDims, Point

_criteria: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = "PASS" if report.passed else "FAIL"
        _criteria.append((status, marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for status, name in _criteria:
        terminalreporter.write_line(f"[{status}] {name}")


@pytest.fixture
def dims():
    return FrameDims(640, 512)


def random_centroids(rng: np.random.Generator, n: int, dims: FrameDims, frame_id: int = 0) -> CentroidSet:
    xy = rng.random((n, 2)) * [dims.width, dims.height]
    return CentroidSet(frame_id, tuple(dict.fromkeys(Point(float(x), float(y)) for x, y in xy)))
