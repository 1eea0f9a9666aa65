import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from catbell import oracle
from catbell.bell import (
    TSIRELSON,
    BellSettings,
    OptimizerConfig,
    PureStateModel,
    ZeroModel,
    bell_value,
    max_bell_curve,
    maximize_bell,
    parameter_threshold,
    pure_state_correlation,
    violation_windows,
)
from catbell.errors import NoCrossingError
from catbell.markov import AdSpinModel
from catbell.phasespace import CatState, MeasurementSetting
from catbell.postmarkov import PostMarkovModel, PostMarkovParams
from catbell.spinstar import SpinStarModel, SpinStarParams

from conftest import GOLDEN_MAXB_D2

angle = st.floats(-np.pi, np.pi)
small = st.floats(-2.0, 2.0)
cplx = st.builds(complex, small, small)
FAST = OptimizerConfig(restarts=8)


class ConstantModel(PureStateModel):
    """Flat family with maxB = 2.5 everywhere."""

    def parts(self, beta, t=0.0):
        z = np.zeros(np.shape(beta))
        return z + 1.25 / np.sqrt(2), z + 1.25 / np.sqrt(2)


def test_equal_settings_give_twice_correlation():
    m = PureStateModel(CatState(2.0))
    s = MeasurementSetting(0.4, 0.3 - 0.1j)
    assert bell_value(m, BellSettings(s, s), 0.0) == pytest.approx(2 * m.evaluate(s, 0.0))


def test_zero_model():
    m = ZeroModel()
    s = MeasurementSetting(0.1, 0.2)
    assert bell_value(m, BellSettings(s, s), 0.0) == 0.0
    assert maximize_bell(m, 0.0, FAST).max_bell == 0.0
    assert violation_windows(m, np.linspace(0, 1, 5), FAST) == []


def test_pure_state_limits():
    assert pure_state_correlation(np.pi / 2, 0.0, 2.0) == pytest.approx(1.0)
    assert pure_state_correlation(0.0, 0.0, 2.0) == 0.0


def test_pure_state_against_oracle(cat_rho):
    theta, beta = np.pi / 4, 0.2 + 0.3j
    ref = oracle.expectation_sigma_parity(cat_rho, theta, beta)
    assert abs(pure_state_correlation(theta, beta, 2.0) - ref) < 1e-10


def test_bell_value_against_four_oracle_terms(cat_rho):
    u = MeasurementSetting(-1.1, 0.05 + 0.02j)
    p = MeasurementSetting(1.1, 1.9 - 0.1j)
    m = PureStateModel(CatState(2.0))
    ex = lambda s_th, s_b: oracle.expectation_sigma_parity(cat_rho, s_th, s_b)  # noqa: E731
    ref = ex(p.theta, p.beta) + ex(u.theta, p.beta) + ex(p.theta, u.beta) - ex(u.theta, u.beta)
    assert abs(bell_value(m, BellSettings(u, p), 0.0) - ref) < 1e-10


@given(angle, cplx)
def test_correlation_bounded(theta, beta):
    assert abs(pure_state_correlation(theta, beta, 2.0)) <= 1 + 1e-12


@given(angle, angle, cplx, cplx)
def test_bell_value_within_tsirelson(t1, t2, b1, b2):
    m = PureStateModel(CatState(2.0))
    B = bell_value(m, BellSettings(MeasurementSetting(t1, b1), MeasurementSetting(t2, b2)), 0.0)
    assert abs(B) <= TSIRELSON + 1e-9


def test_pure_state_golden():
    r = maximize_bell(PureStateModel(CatState(2.0)), 0.0)
    assert r.converged
    assert r.max_bell == pytest.approx(GOLDEN_MAXB_D2, abs=1e-9)
    # the reported settings reproduce the reported value
    assert bell_value(PureStateModel(CatState(2.0)), r.settings, 0.0) == pytest.approx(r.max_bell, abs=1e-12)


def test_spinstar_full_revival_matches_golden():
    r = maximize_bell(SpinStarModel(SpinStarParams(2), CatState(2.0)), np.pi / 2)
    assert r.max_bell == pytest.approx(GOLDEN_MAXB_D2, abs=1e-6)


def test_maximize_is_deterministic():
    m = PureStateModel(CatState(1.3))
    a = maximize_bell(m, 0.0, FAST)
    b = maximize_bell(m, 0.0, FAST)
    assert a.max_bell == b.max_bell
    assert np.array_equal(a.x, b.x)


def test_max_bell_curve_warm_start():
    m = SpinStarModel(SpinStarParams(2), CatState(2.0))
    grid = np.linspace(0, 0.3, 4)
    res = max_bell_curve(m, grid, FAST)
    assert len(res) == 4
    assert res[0].max_bell == pytest.approx(GOLDEN_MAXB_D2, abs=1e-8)
    vals = [r.max_bell for r in res]
    assert all(np.diff(vals) <= 1e-9)


def test_optimizer_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(restarts=0)
    with pytest.raises(ValueError):
        OptimizerConfig(tol=0)
    with pytest.raises(ValueError):
        OptimizerConfig(beta_box=-1)


def test_spinstar_windows_centered_on_revivals():
    m = SpinStarModel(SpinStarParams(2), CatState(2.0))
    wins = violation_windows(m, np.linspace(0, np.pi, 41), FAST, resolution=1e-3)
    centers = [0.0, np.pi / 2, np.pi]
    assert len(wins) == 3
    assert wins[0][0] == 0.0 and wins[-1][1] == pytest.approx(np.pi)
    # interior window symmetric about pi/2
    lo, hi = wins[1]
    assert 0.5 * (lo + hi) == pytest.approx(centers[1], abs=2e-3)
    assert lo < np.pi / 2 < hi


def test_postmarkov_single_window_from_zero():
    m = PostMarkovModel(PostMarkovParams.from_ratio(10.0, 0.0), CatState(2.0))
    wins = violation_windows(m, np.linspace(0, 4, 21), FAST)
    assert len(wins) == 1
    assert wins[0][0] == 0.0
    assert wins[0][1] < 4.0


def test_windows_reject_bad_grid():
    with pytest.raises(ValueError):
        violation_windows(ZeroModel(), [1.0, 0.5], FAST)


def test_threshold_no_crossing():
    assert maximize_bell(ConstantModel(), 0.0, FAST).max_bell == pytest.approx(2.5)
    with pytest.raises(NoCrossingError):
        parameter_threshold(lambda p: ConstantModel(), 0.0, 0.0, 1.0, FAST)


def test_threshold_ad_spin_matches_grid_scan():
    # in P for fixed t: maxB(P) is the AD-spin curve; threshold where it reaches 2
    fam = lambda P: _AtProbability(P)  # noqa: E731
    thr = parameter_threshold(fam, 0.0, 0.0, 1.0, FAST, tol=1e-4)
    grid = np.linspace(0, 1, 201)
    vals = np.array([maximize_bell(AdSpinModel(CatState(2.0)), P, FAST).max_bell for P in grid])
    scan = grid[np.argmax(vals <= 2.0)]
    assert abs(thr - scan) <= 5e-3 + 1e-4


class _AtProbability(AdSpinModel):
    def __init__(self, P):
        super().__init__(CatState(2.0))
        self._P = P

    def parts(self, beta, t):
        return super().parts(beta, self._P)


def test_threshold_postmarkov_nbar():
    fam = lambda n: PostMarkovModel(PostMarkovParams.from_ratio(10.0, n), CatState(2.0))  # noqa: E731
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        thr = parameter_threshold(fam, 1.6, 0.0, 4.0, FAST, tol=1e-3)
    assert thr == pytest.approx(1.6341, abs=0.05)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0, np.pi))
def test_maxb_bounds_spinstar(D, tau):
    r = maximize_bell(SpinStarModel(SpinStarParams(3), CatState(D)), tau, OptimizerConfig(restarts=2))
    assert 0.0 <= r.max_bell <= TSIRELSON + 1e-6
