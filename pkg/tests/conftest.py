import sys
from pathlib import Path

import pytest

from tikzlab.compiler import CompileReport, Diagnostic, Severity

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = Path(__file__).resolve().parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"
SCRIPTS = REPO_ROOT / "scripts"

STUB_ENGINE_CMD = f"{sys.executable} {SCRIPTS / 'stub_engine.py'}"
MOCK_SAMPLER_CMD = f"{sys.executable} {SCRIPTS / 'mock_sampler.py'}"


def fake_compile(code: str) -> CompileReport:
    """In-process mirror of scripts/stub_engine.py: \\FAIL lines break the
    compile, \\SOFTFAIL lines log an error but still produce an image."""
    diagnostics = []
    hard = False
    for i, line in enumerate(code.split("\n"), 1):
        if "\\FAIL" in line or "\\undefinedmacro" in line:
            diagnostics.append(
                Diagnostic(Severity.ERROR, "Undefined control sequence.", i)
            )
            hard = True
        elif "\\SOFTFAIL" in line:
            diagnostics.append(
                Diagnostic(Severity.ERROR, "Undefined control sequence.", i)
            )
    return CompileReport(
        success=not diagnostics,
        produced_image=not hard,
        diagnostics=diagnostics,
        pdf_path=None,
    )


@pytest.fixture
def textree() -> Path:
    return FIXTURES / "textree"


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion in the run summary."""
    lines = []
    for status, verdict in (("passed", "PASS"), ("failed", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::test_acceptance_" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            number = int(name.removeprefix("test_acceptance_").split("_")[0])
            lines.append((number, f"acceptance {number} {verdict}: {name}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
