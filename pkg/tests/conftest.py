"""Shared pytest configuration.

Two things live here: a hypothesis profile tuned for a deterministic CI
run, and a tiny reporting shim that lets the acceptance tests register a
one-line PASS/FAIL verdict per criterion which is echoed in the terminal
summary (plain ``print`` output from passing tests is swallowed by
pytest's capture).
"""

from __future__ import annotations

from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
    print_blob=True,
)
settings.load_profile("ci")

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
