"""Collects acceptance outcomes and prints one line per criterion after the run."""

import pytest

_criteria: dict = {}
_supplementary: dict = {}


def _record(table, key, title, passed):
    ok, _ = table.get(key, (True, title))
    table[key] = (ok and passed, title)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        passed = rep.passed
        for mark in item.iter_markers("criterion"):
            number, title = mark.args
            _record(_criteria, number, title, passed)
        for mark in item.iter_markers("supplementary"):
            (title,) = mark.args
            _record(_supplementary, title, title, passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria and not _supplementary:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_criteria):
        ok, title = _criteria[number]
        tr.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}")
    if _supplementary:
        tr.section("companion checks")
        for title, (ok, _) in _supplementary.items():
            tr.write_line(f"{'PASS' if ok else 'FAIL'}  {title}")
