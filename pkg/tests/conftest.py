import warnings

import pytest
from hypothesis import HealthCheck, settings

warnings.filterwarnings("ignore", message=".*TBB.*")

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE: dict = {}


def record(criterion: int, part: str, ok: bool, detail: str) -> None:
    """Store one acceptance sub-check and echo it."""
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))
    print(f"criterion {criterion} [{part}]: {'PASS' if ok else 'FAIL'} {detail}")


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[c]
        ok = all(p[1] for p in parts)
        failed = ", ".join(p[0] for p in parts if not p[1])
        line = f"criterion {c:2d}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += f" (failed: {failed})"
        terminalreporter.write_line(line)
        for part, pok, detail in parts:
            terminalreporter.write_line(f"    {'ok ' if pok else 'BAD'} {part}: {detail}")
