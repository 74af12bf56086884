from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def vienot_fixture():
    return np.load(FIXTURES / "daltonlens_vienot1999.npz")


@pytest.fixture(scope="session")
def daltonize_fixture():
    return np.load(FIXTURES / "daltonize_0_2_0.npz")


@pytest.fixture
def rng():
    return np.random.default_rng(20250807)


# Acceptance criteria report their outcome here; printed after the run.
ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: (int(k.split()[1].rstrip("ab:")), k)):
        terminalreporter.write_line(f"{key} {ACCEPTANCE_RESULTS[key]}")
