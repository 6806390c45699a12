CRITERIA = []


def record(number, ok, text):
    """Note one acceptance result; all of them are echoed in the terminal summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] {number} {text}"
    CRITERIA.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
