import pytest

from fimkit._accel import HAS_NUMBA

BACKENDS = ["numpy"] + (["numba"] if HAS_NUMBA else [])

# criterion -> (passed, failing check names); filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        ok, failing = ACCEPTANCE[c]
        line = f"criterion {c:2d}: {'PASS' if ok else 'FAIL'}"
        if failing:
            line += "  (" + ", ".join(failing) + ")"
        terminalreporter.write_line(line)
