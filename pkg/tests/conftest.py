import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance verdicts, filled by test_acceptance.py and printed after the run
ACCEPTANCE: dict[int, str] = {}
EXTRA_REPORT: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE and not EXTRA_REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for line in EXTRA_REPORT:
        terminalreporter.write_line(line)
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
