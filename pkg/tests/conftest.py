import numpy as np
import pytest

from rgpm import backend
from rgpm.kernel import KernelConfig
from rgpm.sim import cubic_scenario


@pytest.fixture(params=backend.available())
def each_backend(request):
    with backend.using(request.param):
        yield request.param


@pytest.fixture
def cubic_cfg():
    return cubic_scenario().kernel


@pytest.fixture
def plane_cfg():
    return KernelConfig(sigma_k=2.0, length_scale=1.5, points_per_dim=(5, 5),
                        input_bounds=((0.0, 1.0), (0.0, 1.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line, then assert the condition."""
    def record(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
