import pytest

_verdicts: list[tuple[int, str, bool, str]] = []


class Criterion:
    """Context manager recording one acceptance verdict for the summary."""

    def __init__(self, number: int, title: str):
        self.number, self.title, self.detail = number, title, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        detail = self.detail if ok else f"{exc_type.__name__}: {exc}".splitlines()[0]
        _verdicts.append((self.number, self.title, ok, detail))
        line = f"criterion {self.number} {'PASS' if ok else 'FAIL'}: {self.title} ({detail})"
        print(line)
        return False


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(_verdicts):
        terminalreporter.write_line(f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})")
