import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT / "src") not in sys.path:
    sys.path.insert(0, str(ROOT / "src"))

# criterion number -> list of (sub-check, ok, detail)
ACCEPTANCE = {}


def record(criterion, check, ok, detail=""):
    """Store one sub-check of an acceptance criterion for the summary lines."""
    ACCEPTANCE.setdefault(criterion, []).append((check, bool(ok), detail))
    line = f"[criterion {criterion}] {'PASS' if ok else 'FAIL'} {check}: {detail}"
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[k]
        ok = all(c[1] for c in checks)
        failed = [c[0] for c in checks if not c[1]]
        head = f"criterion {k}: {'PASS' if ok else 'FAIL'}"
        if failed:
            head += f" (failing: {', '.join(failed)})"
        terminalreporter.write_line(head)
        for check, c_ok, detail in checks:
            terminalreporter.write_line(f"    {'pass' if c_ok else 'FAIL'}  {check}: {detail}")


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)
