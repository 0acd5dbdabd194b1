import os
import time

from hypothesis import HealthCheck, settings

settings.register_profile("ci", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

SESSION_START = time.perf_counter()
SUITE_BUDGET = 300.0
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    elapsed = time.perf_counter() - SESSION_START
    if 10 in ACCEPTANCE:
        ok, detail = ACCEPTANCE[10]
        ACCEPTANCE[10] = (ok and elapsed < SUITE_BUDGET, f"{detail}; suite wall clock {elapsed:.1f} s")
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
