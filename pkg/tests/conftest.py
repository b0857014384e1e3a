import numpy as np
import pytest

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by a test")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    rep = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None and rep.when == "call":
        number, title = marker.args
        detail = getattr(item, "acceptance_detail", {}).get("text", "")
        _CRITERIA[number] = (title, rep.passed, detail)
    return rep


@pytest.fixture
def detail(request):
    """Tests write a one-line summary of what they measured into this dict."""
    box = {}
    request.node.acceptance_detail = box
    return box


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, text = _CRITERIA[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}" + (f" ({text})" if text else ""))
