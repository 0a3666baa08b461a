import numpy as np
import pytest

from intflow import _accel

BACKENDS = ["numba", "numpy"] if _accel.numba_available() else ["numpy"]


@pytest.fixture(params=BACKENDS)
def backend(request):
    with _accel.use_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_rotation(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


ACCEPTANCE_LINES = {}


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for an acceptance criterion; printed in the terminal summary."""
    def record(label, detail):
        request.node._criterion = (label, detail)
    yield record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and hasattr(item, "_criterion"):
        label, detail = item._criterion
        ACCEPTANCE_LINES[label] = ("PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split(".")[0].rstrip("ab")), s)):
        status, detail = ACCEPTANCE_LINES[label]
        terminalreporter.write_line(f"{status}  {label}: {detail}")
