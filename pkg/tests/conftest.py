import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion reported in the summary")
    config._criteria = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    ok = call.excinfo is None
    detail = ""
    if not ok:
        detail = str(call.excinfo.value).strip().splitlines()[0] if str(call.excinfo.value).strip() else call.excinfo.typename
    item.config._criteria[number] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    crit = getattr(config, "_criteria", {})
    if not crit:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(crit):
        title, ok, detail = crit[number]
        line = f"criterion {number} ({title}): {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f"  [{detail[:200]}]"
        terminalreporter.write_line(line)
