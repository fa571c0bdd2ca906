import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# one line per acceptance criterion, filled in by tests/test_acceptance.py
CRITERIA_LINES: list[str] = []


def _order(line: str):
    tag = line.split(":")[0].split()[1]
    digits = "".join(c for c in tag if c.isdigit())
    return int(digits), tag


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES, key=_order):
            terminalreporter.write_line(line)
