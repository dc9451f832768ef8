from __future__ import annotations

import numpy as np
import pytest

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}
ACCEPTANCE_TITLES = {
    1: "special values",
    2: "SL2(Z) invariance",
    3: "Schwarzian ODE",
    4: "modular polynomials",
    5: "zeta_1 round trip",
    6: "witness existence (j)",
    7: "witness existence (J)",
    8: "density trend",
    9: "isolation audit",
    10: "gating",
}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record():
    def _record(criterion: int, passed: bool, detail: str):
        ACCEPTANCE[criterion] = (bool(passed), detail)
        print(f"criterion {criterion} ({ACCEPTANCE_TITLES[criterion]}): {'PASS' if passed else 'FAIL'} - {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_TITLES):
        if k in ACCEPTANCE:
            passed, detail = ACCEPTANCE[k]
            status = "PASS" if passed else "FAIL"
        else:
            status, detail = "FAIL", "not run"
        terminalreporter.write_line(f"[{status}] {k:2d}. {ACCEPTANCE_TITLES[k]}: {detail}")
