import re

import pytest

_ACCEPTANCE: dict[str, tuple[str, str]] = {}
_NAME = re.compile(r"test_criterion_(\w+?)_")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = _NAME.match(item.name)
    if m is None or not item.nodeid.startswith("tests/test_acceptance.py"):
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _ACCEPTANCE[m.group(1)] = ("PASS" if rep.passed else "FAIL", doc)


def _key(k):
    m = re.match(r"(\d+)(\w*)", k)
    return (int(m.group(1)), m.group(2)) if m else (10**6, k)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE, key=_key):
        status, doc = _ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {status}  {doc}")
