from pathlib import Path

import pytest

from govsim.simctl import load_scenario, run_scenario

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"

REFERENCE_SCENARIOS = ("credit_scoring", "collusion_attack", "regulation_shift")


def scenario_path(name: str) -> Path:
    return SCENARIO_DIR / f"{name}.json"


@pytest.fixture(scope="session")
def reference_results():
    """One run of each reference scenario, shared across the suite."""
    return {name: run_scenario(scenario_path(name)) for name in REFERENCE_SCENARIOS}


@pytest.fixture(scope="session")
def reference_scenarios():
    return {name: load_scenario(scenario_path(name)) for name in REFERENCE_SCENARIOS}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    rows = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            if "test_acceptance" in getattr(report, "nodeid", ""):
                rows.append((report.nodeid.split("::")[-1], outcome.upper()))
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, outcome in sorted(rows):
            terminalreporter.write_line(f"{outcome:>6}  {name}")
