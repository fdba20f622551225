
# criterion number -> (title, outcome); filled from tests marked ``acceptance``
_CRITERIA: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark:
            number, title = mark.args
            _CRITERIA.setdefault(number, [title, None])
            item.user_properties.append(("acceptance", number))


def pytest_runtest_logreport(report):
    for key, number in report.user_properties:
        if key != "acceptance":
            continue
        entry = _CRITERIA[number]
        if report.failed:
            entry[1] = "FAIL"
        elif report.when == "call" and report.passed and entry[1] is None:
            entry[1] = "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcome = _CRITERIA[number]
        terminalreporter.write_line(f"[{outcome or 'NOT RUN'}] criterion {number}: {title}")
