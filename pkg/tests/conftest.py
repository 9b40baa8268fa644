import pytest

from isingstrip import iom
from isingstrip.precision import extended

EXT = extended(50)
EXT_ORDER = 15

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


class FamilyCache:
    """Extended-precision IOM families, built on first use and shared by the whole session."""

    def __init__(self):
        self._store = {}

    def __call__(self, L: int, b: int) -> iom.IomFamily:
        key = (L, b)
        if key not in self._store:
            self._store[key] = iom.extract_iom(L, b, EXT_ORDER, EXT)
        return self._store[key]


@pytest.fixture(scope="session")
def ext_family():
    return FamilyCache()


@pytest.fixture
def record_criterion():
    def record(number: int, passed: bool, detail: str):
        ACCEPTANCE[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
