"""Shared pytest plumbing.

The acceptance module records one verdict line per criterion; the hook
below prints them in a dedicated section after the run so they stay
visible even when every test passes.
"""

ACCEPTANCE_LINES = []


def record_criterion(index: int, name: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(
        "criterion %2d  %-36s %s  (%s)" % (index, name, "PASS" if passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
