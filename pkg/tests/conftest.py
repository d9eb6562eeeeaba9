"""Shared pytest wiring.

Replays the acceptance scoreboard (one pass/fail line per criterion) after
the terminal summary, so the lines are visible even with output capture on.
"""

import sys


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
