import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from catbell import oracle
from catbell.bell import pure_state_correlation
from catbell.brownian import BrownianModel, BrownianParams
from catbell.errors import CompletenessError, CutoffError, StepCountError
from catbell.markov import AdParams, PdParams
from catbell.phasespace import CatState
from catbell.postmarkov import PostMarkovParams, kernel_coefficients


def _check_state(rho, tol=1e-10):
    assert abs(rho.trace() - 1) < tol
    assert rho.hermiticity_error() < tol
    assert rho.min_eigenvalue() > -tol


def test_cat_at_zero_displacement():
    rho = oracle.truncated_cat(0.0, 5)
    ref = np.zeros((10, 10))
    for i in (0, 5):
        for j in (0, 5):
            ref[i, j] = 0.5
    assert np.allclose(rho.matrix, ref)


def test_cat_trace_and_spin_coherence(cat_rho):
    _check_state(cat_rho)
    S = cat_rho.spin_marginal()
    assert 2 * S[0, 1].real == pytest.approx(np.exp(-8.0), rel=1e-8)


def test_cat_cutoff_errors():
    with pytest.raises(CutoffError):
        oracle.truncated_cat(2.0, 20)
    with pytest.raises(CutoffError):
        oracle.truncated_cat(4.0, 57, tol=1e-30)


def test_displacement_and_parity_are_unitary_hermitian():
    D = oracle.displacement(0.4 - 0.7j, 60)
    P = oracle.parity_operator(0.4 - 0.7j, 60)
    assert np.allclose(P, P.conj().T, atol=1e-12)
    # products are exact only away from the cutoff
    assert np.abs((P @ P)[:10, :10] - np.eye(10)).max() < 1e-10
    assert np.abs((D.conj().T @ D)[:10, :10] - np.eye(10)).max() < 1e-10


def test_expectation_simple_states():
    N = 10
    m = np.zeros((2 * N, 2 * N), dtype=complex)
    m[0, 0] = 1.0  # |up> (x) |0>
    rho = oracle.FockOperator(m, N)
    assert oracle.expectation_sigma_parity(rho, 0.0, 0.0) == pytest.approx(1.0)
    assert oracle.expectation_sigma_parity(oracle.truncated_cat(2.0, 40), np.pi / 2, 0.0) == pytest.approx(
        1.0, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(-np.pi, np.pi), st.builds(complex, st.floats(-2, 2), st.floats(-2, 2)))
def test_expectation_many_matches_single(theta, beta):
    rho = oracle.truncated_cat(1.0, 20)
    a = oracle.expectation_sigma_parity(rho, theta, beta)
    b = oracle.expectation_sigma_parity_many(rho, [(theta, beta)])[0]
    assert a == b


@pytest.mark.parametrize("channel,target,ident", [("ad", "spin", 1.0), ("ad", "cv", 1.0),
                                                   ("pd", "spin", 0.0), ("pd", "cv", 0.0)])
def test_identity_channels(cat_rho, channel, target, ident):
    out = oracle.evolve_kraus(cat_rho, channel, target, ident)
    assert np.abs(out.matrix - cat_rho.matrix).max() < 1e-14


def test_ad_cv_scales_photon_number(cat_rho):
    n = np.arange(cat_rho.N)
    before = np.real(np.diag(cat_rho.cv_marginal()) @ n)
    after = oracle.evolve_kraus(cat_rho, "ad", "cv", 0.35)
    assert np.real(np.diag(after.cv_marginal()) @ n) == pytest.approx(0.35 * before, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["ad", "pd"]), st.sampled_from(["spin", "cv"]), st.floats(0.0, 0.99))
def test_kraus_preserves_state(channel, target, P):
    rho = oracle.truncated_cat(2.0, 40)
    param = AdParams.from_probability(P).eta if channel == "ad" else PdParams.from_probability(P).tau_pd
    _check_state(oracle.evolve_kraus(rho, channel, target, param))


def test_kraus_bad_arguments(cat_rho):
    with pytest.raises(ValueError):
        oracle.evolve_kraus(cat_rho, "xx", "cv", 0.5)
    with pytest.raises(CompletenessError):
        oracle.evolve_kraus(cat_rho, "pd", "cv", 0.8, k_max=5)


def test_free_rotation_limit():
    p = BrownianParams(g=1e-9, x=10.0)
    N = 40
    rho0 = oracle.truncated_cat(2.0, N)
    t = 1.0
    rho = oracle.evolve_brownian_rk4(rho0, p, t, 200)
    for theta, beta in [(0.3, 0.2 + 0.5j), (1.2, -1.0 + 0.1j)]:
        ref = pure_state_correlation(theta, beta * np.exp(1j * t), 2.0)
        assert abs(oracle.expectation_sigma_parity(rho, theta, beta) - ref) < 1e-8


def test_rk4_zero_time_is_identity(cat_rho):
    out = oracle.evolve_brownian_rk4(cat_rho, BrownianParams(), 0.0, 3)
    assert np.abs(out.matrix - cat_rho.matrix).max() < 1e-14


def test_rk4_argument_checks(cat_rho):
    with pytest.raises(ValueError):
        oracle.evolve_brownian_rk4(cat_rho, BrownianParams(), 0.1, 3, damping="bogus")
    with pytest.raises(StepCountError):
        oracle.evolve_brownian_rk4(cat_rho, BrownianParams(), 0.1, 0)
    with pytest.raises(StepCountError):
        oracle.evolve_brownian_rk4(cat_rho, BrownianParams(g=0.3, x=10), 0.5, 2, check=True)


def test_rk4_preserves_trace_and_hermiticity():
    p = BrownianParams(g=0.3, x=10.0)
    rho0 = oracle.truncated_cat(2.0, 50)
    t = 0.1
    rho = oracle.evolve_brownian_rk4(rho0, p, t, int(np.ceil(t / oracle.stable_step(p, 50, t))))
    assert abs(rho.trace() - 1) < 1e-10
    assert rho.hermiticity_error() < 1e-12


def test_rk4_matches_closed_form_fig2a():
    p = BrownianParams(g=0.3, x=10.0, kT=25.0)
    N = 60
    t = 1.0 / p.omega_c
    rho = oracle.evolve_brownian_rk4(oracle.truncated_cat(2.0, N), p, t,
                                     int(np.ceil(t / oracle.stable_step(p, N, t))))
    m = BrownianModel(p, CatState(2.0))
    for theta, beta in [(0.5, 0.3 + 0.2j), (-0.9, 1.6)]:
        assert abs(m.correlation(theta, beta, 1.0) - oracle.expectation_sigma_parity(rho, theta, beta)) < 1e-5


def test_spinstar_map_limits():
    with pytest.raises(ValueError):
        oracle.spinstar_map(0.1, 9)
    m = oracle.spinstar_map(0.0, 3)
    assert np.allclose(m(0, 1), [[0, 1], [0, 0]])


def test_volterra_trivial_cases():
    p = PostMarkovParams(gamma0=1.0, gamma=0.3, nbar=0.4)
    a0 = np.array([0.7, -0.2, 0.1 + 0.3j, 0.5])
    assert np.array_equal(oracle.evolve_volterra(a0, p, 0.0), a0)
    out = oracle.evolve_volterra(a0, p, 2.5)
    assert out[0] == pytest.approx(a0[0], abs=1e-12)
    assert np.allclose(out, a0 * kernel_coefficients(2.5, p), atol=1e-7)


def test_volterra_step_budget():
    with pytest.raises(StepCountError):
        oracle.evolve_volterra(np.ones(4), PostMarkovParams(gamma=2.0), 3.0, step=0.5, tol=1e-16, max_halvings=2)


@pytest.mark.parametrize("kind", ["ad_cv", "pd_cv"])
def test_cutoff_stability(kind):
    vals = []
    for N in (40, 80):
        rho = oracle.truncated_cat(2.0, N)
        ch, tgt = kind.split("_")
        param = 0.6 if ch == "ad" else 0.7
        rho = oracle.evolve_kraus(rho, ch, tgt, param)
        vals.append(oracle.expectation_sigma_parity(rho, 0.7, 0.3 - 0.2j))
    assert abs(vals[0] - vals[1]) < 1e-9
