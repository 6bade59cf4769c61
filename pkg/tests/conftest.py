import random

import pytest

from bump_auction.core import MechanismParams

# criterion number -> list of (part, passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def record(criterion: int, part: str, passed: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[k]
        ok = all(p for _, p, _ in parts)
        detail = "; ".join(f"{name}: {'ok' if p else 'FAILED'} ({d})" for name, p, d in parts)
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} | {detail}")


@pytest.fixture
def params():
    return MechanismParams(0.25, 1.0)


@pytest.fixture
def rng():
    return random.Random(20240601)
