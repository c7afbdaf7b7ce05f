import pytest

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance criterion outcome, then assert it."""

    def check(name: str, ok: bool, detail: str = "") -> None:
        ACCEPTANCE_RESULTS.append((name, bool(ok), detail))
        print(f"[{'PASS' if ok else 'FAIL'}] {name} {detail}")
        assert ok, f"{name}: {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
