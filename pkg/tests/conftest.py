"""Shared hooks: the acceptance suite prints its verdicts at the end of the run."""

VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(VERDICTS, key=lambda l: int(l.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)
