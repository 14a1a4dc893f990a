import os
import sys

from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# criterion id -> list of (part, outcome, seconds, budget)
_ACCEPTANCE: dict[str, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(cid, name, budget): acceptance criterion part")


def pytest_runtest_makereport(item, call):
    if call.when != "call":
        return
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    cid, name, budget = mark.args
    if call.excinfo is None:
        outcome = "PASS"
    else:
        outcome = "FAIL"
    _ACCEPTANCE.setdefault((cid, name, budget), []).append((item.name, outcome, call.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for (cid, name, budget), parts in sorted(_ACCEPTANCE.items(), key=lambda kv: int(kv[0][0])):
        status = "PASS" if all(p[1] == "PASS" for p in parts) else "FAIL"
        seconds = sum(p[2] for p in parts)
        failed = [p[0] for p in parts if p[1] != "PASS"]
        extra = f"  failing: {', '.join(failed)}" if failed else ""
        tr.write_line(f"{status} {cid:>2} {name:<22} {seconds:7.2f}s (budget {budget}s){extra}")
