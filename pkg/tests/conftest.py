import pytest

# acceptance results, printed in the terminal summary
_ACCEPTANCE = {}


@pytest.fixture
def acceptance(request):
    """Record one acceptance criterion: ``acceptance(n, title)`` then describe."""

    state = {}

    def record(number, title):
        state["key"] = (number, title)
        _ACCEPTANCE[(number, title)] = ("FAIL", "")

    def detail(text):
        state["detail"] = text

    record.detail = detail
    yield record
    if "key" in state:
        rep = getattr(request.node, "rep_call", None)
        ok = rep is not None and rep.passed
        _ACCEPTANCE[state["key"]] = ("PASS" if ok else "FAIL", state.get("detail", ""))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for (number, title), (status, detail) in sorted(_ACCEPTANCE.items()):
        line = f"{status} criterion {number:2d}: {title}"
        if detail:
            line += f" [{detail}]"
        tr.write_line(line)
