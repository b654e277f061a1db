import pytest

ACCEPTANCE = {}


class Recorder:
    """Records one pass/fail line per acceptance criterion."""

    def __init__(self, number, title):
        self.number = number
        self.title = title

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            ACCEPTANCE[self.number] = ("PASS", self.title, "")
        elif issubclass(exc_type, pytest.xfail.Exception):
            return False
        else:
            ACCEPTANCE[self.number] = ("FAIL", self.title, str(exc).splitlines()[0] if str(exc) else
                                       exc_type.__name__)
        return False


@pytest.fixture
def criterion():
    return Recorder


@pytest.fixture
def criterion_note():
    def note(number, status, title, detail=""):
        ACCEPTANCE[number] = (status, title, detail)
    return note


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=str):
        status, title, detail = ACCEPTANCE[key]
        line = f"[{status}] {key}. {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
