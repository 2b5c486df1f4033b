import _acceptance_registry


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_registry.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_registry.VERDICTS:
            terminalreporter.write_line(line)
