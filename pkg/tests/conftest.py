import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary ------------------------------------------------------------
# Criterion clauses record their outcome here; the terminal summary prints one
# PASS/FAIL line per criterion, followed by the clause lines.

ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


class AcceptanceRecorder:
    def __call__(self, criterion: int, clause: str, passed: bool, detail: str = "") -> bool:
        ACCEPTANCE.setdefault(criterion, []).append((clause, bool(passed), detail))
        return bool(passed)


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        clauses = ACCEPTANCE[crit]
        ok = all(p for _, p, _ in clauses)
        failed = [c for c, p, _ in clauses if not p]
        suffix = "" if ok else f" (failing: {', '.join(failed)})"
        tr.write_line(f"{'PASS' if ok else 'FAIL'} criterion {crit}{suffix}")
    for crit in sorted(ACCEPTANCE):
        for clause, passed, detail in ACCEPTANCE[crit]:
            tr.write_line(f"    {'PASS' if passed else 'FAIL'} {crit}.{clause}: {detail}")
