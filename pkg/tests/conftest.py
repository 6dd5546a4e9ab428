import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cvrecon.ldpc import Protograph, default_protograph, expand_protograph

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def desk_code():
    """The shipped R = 0.2 code at N = 8190."""
    return expand_protograph(default_protograph(), 819, seed=1)


@pytest.fixture(scope="session")
def small_code():
    """A short code for fast decoder checks (N = 640)."""
    return expand_protograph(default_protograph(), 64, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, with the detail each test recorded."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid or rep.when not in ("call", "setup"):
                continue
            n = nodeid.split("test_criterion_")[1].split("_")[0]
            detail = dict(rep.user_properties).get("detail", "")
            lines.append((int(n), f"ACCEPTANCE criterion {n}: {'PASS' if outcome == 'passed' else 'FAIL'}"
                                  + (f" - {detail}" if detail else "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
