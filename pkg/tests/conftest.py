import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from quicktext import _pykernels  # noqa: E402

try:
    from quicktext import _kernels
except ImportError:  # extension not built
    _kernels = None

BACKENDS = [pytest.param(_pykernels, id="python")]
if _kernels is not None:
    BACKENDS.append(pytest.param(_kernels, id="cython"))


@pytest.fixture(params=BACKENDS)
def kern(request):
    """Each kernel implementation that is importable."""
    return request.param


@pytest.fixture
def write_corpus(tmp_path):
    def write(lines, name="corpus.txt"):
        path = tmp_path / name
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return path

    return write


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
