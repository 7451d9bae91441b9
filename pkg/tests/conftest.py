import shutil
from pathlib import Path

import pytest

from schemaprobe.cli import main, toy_dir

DATA = Path(__file__).parent / "data"

# filled by the acceptance tests, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def toy_workspace(tmp_path_factory) -> Path:
    """Private copy of the vendored benchmark with its index already built."""
    dest = tmp_path_factory.mktemp("toy")
    shutil.copytree(toy_dir(), dest, dirs_exist_ok=True, ignore=shutil.ignore_patterns("index", ".cache"))
    assert main(["index", "--config", str(dest / "config.json"), "--offline"]) == 0
    return dest
