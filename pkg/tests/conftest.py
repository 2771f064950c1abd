import numpy as np
import pytest

_acceptance = {}


def random_density(dim, rng, rank=None):
    g = rng.standard_normal((dim, rank or dim))
    m = g @ g.T
    return m / np.trace(m)


def random_projector(dim, rng, rank=None):
    if rank is None:
        rank = int(rng.integers(0, dim + 1))
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    basis = q[:, :rank]
    return basis @ basis.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_acceptance.items()):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")
