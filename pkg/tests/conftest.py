"""Shared pytest plumbing: collects acceptance-criterion verdicts so the
terminal summary ends with one PASS/FAIL line per criterion."""

from __future__ import annotations

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def record_criterion(name: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS[name] = (passed, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[name]
        verdict = "PASS" if passed else "FAIL"
        line = f"{name}: {verdict}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
