import numpy as np
import pytest
from scipy.linalg import expm

from geoflow.fuchsian import Bump, InvariantObservable
from geoflow.lie_core import GroupElement


@pytest.fixture(scope="session")
def psi():
    """Bump of amplitude 0.1 and radius 0.6 around the identity frame on top of 1."""
    return InvariantObservable(1.0, [Bump(GroupElement.identity(), 0.1, 0.6)])


@pytest.fixture(scope="session")
def near_frames():
    """Frames inside the bump support, where every psi-dependent term is active."""
    return random_frames(np.random.default_rng(42), 8, 0.25)


def random_frames(rng, n, scale=1.0):
    """Frames exp(Y) for Gaussian algebra elements Y, spread over the plane."""
    out = []
    for cm, c0, cp in scale * rng.normal(size=(n, 3)):
        out.append(expm(np.array([[0.5 * c0, cp], [cm, -0.5 * c0]])))
    return np.stack(out)


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number, title, passed, detail, seconds, budget):
        in_time = seconds <= budget
        ok = bool(passed) and in_time
        line = (f"{'PASS' if ok else 'FAIL'} criterion {number:>2} {title}: {detail} "
                f"[{seconds:.1f} s, budget {budget:g} s]")
        _VERDICTS.append(line)
        print(line)
        assert passed, line
        assert in_time, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
