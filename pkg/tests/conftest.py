import functools

import pytest

from mtgpkit.mtgpdc import SearchRng, TemperingTrace, search_recursion_params, search_tempering

# criterion number -> (passed, detail); printed at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str):
    ACCEPTANCE[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")


@functools.lru_cache(maxsize=None)
def searched(p, w, id_=0, search_seed=7):
    """Certified recursion parameters and characteristic polynomial (cached)."""
    return search_recursion_params(p, w, id_, SearchRng(search_seed, id_, p))


@functools.lru_cache(maxsize=None)
def searched_tempered(p, w, id_=0, search_seed=7):
    rp, f = searched(p, w, id_, search_seed)
    trace = TemperingTrace()
    tp = search_tempering(rp, trace=trace)
    return rp, tp, f, trace


@pytest.fixture(scope="session")
def p13():
    return searched_tempered(13, 4)
