from __future__ import annotations


def pytest_terminal_summary(terminalreporter):
    lines = {}
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call":
                continue
            for key, value in rep.user_properties:
                if key == "criterion":
                    number, title, detail = value
                    lines[number] = f"AC{number:<2} {outcome == 'passed' and 'PASS' or 'FAIL'}  {title}: {detail}"
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
