import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bearingad.pipeline import (FULL_SCALE, ExperimentConfig, SyntheticDatasetSpec,  # noqa: E402
                                scaled_protocol)

# criterion number -> (passed, one-line detail); filled by test_acceptance.py
ACCEPTANCE = {}


def full_scale() -> bool:
    return os.environ.get("BEARINGAD_FULL_SCALE", "") not in ("", "0")


def benchmark_spec() -> SyntheticDatasetSpec:
    return FULL_SCALE if full_scale() else SyntheticDatasetSpec()


def benchmark_config() -> ExperimentConfig:
    """Default protocol, with the training draw scaled like the dataset (500 -> 125 at 1/4)."""
    return ExperimentConfig() if full_scale() else scaled_protocol(ExperimentConfig(), 0.25)


@pytest.fixture(scope="session")
def benchmark_tables():
    """All five feature tables of the synthetic benchmark dataset, with extraction time."""
    import time

    from bearingad.pipeline import build_tables, synthetic_records

    t0 = time.perf_counter()
    tables = build_tables(synthetic_records(benchmark_spec()))
    return tables, time.perf_counter() - t0


def pytest_terminal_summary(terminalreporter):
    ran = [r for r in terminalreporter.stats.get("passed", []) + terminalreporter.stats.get(
        "failed", []) + terminalreporter.stats.get("error", []) if "test_acceptance" in r.nodeid]
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 11):
        if number in ACCEPTANCE:
            passed, detail = ACCEPTANCE[number]
            status = "PASS" if passed else "FAIL"
        else:
            status, detail = "NOT RUN", "no result recorded (deselected or errored)"
        terminalreporter.write_line(f"criterion {number:2d}: {status:7s} {detail}")
