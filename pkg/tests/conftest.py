import numpy as np
import pytest

from catbell import oracle

# max |B| of the D = 2 cat state: dense complex-beta grid of oracle
# expectations, all grid pairs scored, best pairs refined on the oracle.
GOLDEN_MAXB_D2 = 2.236067997630775


@pytest.fixture(scope="session")
def cat_rho():
    return oracle.truncated_cat(2.0, 40)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def low_cutoff_scan():
    """maxB over the x = 0.2, g = 0.05, kT = 25 preset grid (shared by slow tests)."""
    from catbell.bell import max_bell_curve
    from catbell.experiment import load_config

    cfg = load_config("fig2_x0.2_g0.05")
    model = cfg.model_at()
    grid = np.asarray(cfg.grid)
    res = max_bell_curve(model, grid, cfg.optimizer, warm_start=False)
    return model, grid, np.array([r.max_bell for r in res])


ACCEPTANCE = {}


@pytest.fixture
def record():
    """Store one pass/fail line per acceptance criterion."""

    def _record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        return bool(passed)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
