import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from slp_dfrc.alm import init_radar_only, solve_alm
from slp_dfrc.ci import build_ci, enumerate_symbol_vectors, qos_threshold
from slp_dfrc.evaluation import (
    _fit_components,
    beampattern_mse,
    conditional_glr,
    glr,
    glr_amplitude,
    iglrt_estimate,
    match_errors,
    max_glr,
    pd_at_pfa,
    psk_union_bound,
    q_function,
    rmse_angles,
    roc_curve,
    ser_monte_carlo,
    simulate_capture,
)
from slp_dfrc.scenario import ArrayModel, instantaneous_beampattern, steering_vector

TARGETS = np.deg2rad([-40.0, 0.0, 40.0])


def cplx(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


@pytest.fixture(scope="module")
def gamma6_block(reference_setup):
    """ALM precoders for every QPSK symbol vector at a 6 dB target."""
    sc, cp = reference_setup
    beta = qos_threshold(np.sqrt(sc.user_noise[0]), np.pi / 4, 10 ** 0.6)
    x0 = init_radar_only(cp, sc.amplitude, 0).x
    table = enumerate_symbol_vectors(3, 4)
    X = np.stack([solve_alm(sc, cp, build_ci(sc.channels, s, beta), x_init=x0).x for s in table])
    return table, X, beta


def test_capture_noiseless_single_target(rng):
    arr = ArrayModel(6)
    X = cplx(rng, 6, 12)
    a = steering_vector(arr, 0.3)
    np.testing.assert_allclose(simulate_capture(X, arr, [0.3], [1.0], 0.0), np.outer(a, a.conj()) @ X, atol=1e-12)


def test_capture_noise_only_variance(rng):
    Y = simulate_capture(np.zeros((10, 2000)), ArrayModel(10), [], [], 0.1, seed=1)
    assert np.mean(np.abs(Y) ** 2) == pytest.approx(0.1, rel=0.05)


def test_capture_superposition(rng):
    arr = ArrayModel(5)
    X = cplx(rng, 5, 8)
    both = simulate_capture(X, arr, [0.1, -0.5], [1.0, 0.5j], 0.3, seed=4)
    one = simulate_capture(X, arr, [0.1], [1.0], 0.3, seed=4)
    two = simulate_capture(X, arr, [-0.5], [0.5j], 0.0)
    np.testing.assert_allclose(both, one + two, atol=1e-12)


def test_beampattern_mse_examples(reference_setup, rng):
    sc, _ = reference_setup
    X = sc.amplitude * np.exp(2j * np.pi * rng.random((10, 4)))
    P = instantaneous_beampattern(X[:, 0], sc.array, sc.grid.angles)
    assert beampattern_mse(X[:, :1], P, sc.grid, sc.array) == pytest.approx(0.0, abs=1e-20)
    pats = np.stack([instantaneous_beampattern(X[:, n], sc.array, sc.grid.angles) for n in range(4)])
    zero = np.zeros(sc.grid.size)
    assert beampattern_mse([X[:, :2], X[:, 2:]], zero, sc.grid, sc.array) == pytest.approx(np.mean(pats**2))
    with pytest.raises(ValueError):
        beampattern_mse(np.zeros((10, 0)), zero, sc.grid, sc.array)


def test_glr_noiseless_is_one(rng):
    arr = ArrayModel(8)
    X = cplx(rng, 8, 10)
    Y = simulate_capture(X, arr, [0.2], [0.7 - 0.2j], 0.0)
    assert glr(Y, X, arr, 0.2) == pytest.approx(1.0)
    assert glr_amplitude(Y, X, arr, 0.2) == pytest.approx(0.7 - 0.2j)


@given(st.integers(0, 2**32 - 1), st.floats(-1.5, 1.5))
def test_glr_in_unit_interval(seed, theta):
    rng = np.random.default_rng(seed)
    arr = ArrayModel(6)
    X = cplx(rng, 6, 7)
    Y = cplx(rng, 6, 7)
    g = glr(Y, X, arr, theta)
    assert 0.0 <= g <= 1.0


def test_glr_amplitude_least_squares_oracle(rng):
    arr = ArrayModel(6)
    for _ in range(10):
        X, Y = cplx(rng, 6, 9), cplx(rng, 6, 9)
        theta = rng.uniform(-1, 1)
        a = steering_vector(arr, theta)
        atom = np.outer(a, (X.conj().T @ a).conj())
        beta, *_ = np.linalg.lstsq(atom.reshape(-1, 1), Y.reshape(-1), rcond=None)
        assert glr_amplitude(Y, X, arr, theta) == pytest.approx(beta[0], rel=1e-10)
        s1 = np.mean(np.abs(Y - beta[0] * atom) ** 2)
        s0 = np.mean(np.abs(Y) ** 2)
        assert glr(Y, X, arr, theta) == pytest.approx(1 - (s1 / s0) ** 6, rel=1e-10)


def test_glr_zero_illumination():
    arr = ArrayModel(2)
    X = np.array([[1.0], [-1.0]], dtype=complex)  # orthogonal to a(0) = [1, 1]
    assert glr(np.ones((2, 1)), X, arr, 0.0) == 0.0


def test_conditional_glr_brute_force(rng):
    arr = ArrayModel(6)
    X, Y = cplx(rng, 6, 10), cplx(rng, 6, 10)
    detected = np.array([-0.4, 0.5])
    cand = np.array([-1.0, 0.1, 0.9])
    _, Y_res = _fit_components(Y, X, list(steering_vector(arr, detected)))
    res_pow = np.sum(np.abs(Y_res) ** 2)
    for theta, value in zip(cand, conditional_glr(Y, X, arr, cand, detected)):
        _, Y_full = _fit_components(Y, X, list(steering_vector(arr, np.append(detected, theta))))
        ratio = np.sum(np.abs(Y_full) ** 2) / res_pow
        assert value == pytest.approx(1 - ratio**6, rel=1e-9)
    # a candidate already in the model explains nothing new
    assert conditional_glr(Y, X, arr, detected[:1], detected)[0] == pytest.approx(0.0, abs=1e-9)


def test_residual_orthogonal_to_components(rng):
    arr = ArrayModel(10)
    X = cplx(rng, 10, 20)
    Y = simulate_capture(X, arr, TARGETS, 1.0, 0.1, seed=3)
    res = iglrt_estimate(Y, X, arr, np.deg2rad(np.arange(-90, 91)), 3, 0.0)
    for a in steering_vector(arr, res.angles):
        atom = np.outer(a, a.conj() @ X)
        assert abs(np.vdot(atom, res.residual)) < 1e-8 * np.linalg.norm(atom) * np.linalg.norm(Y)


def test_iglrt_noiseless_exact(reference_setup, gamma6_block):
    sc, _ = reference_setup
    _, Xall, _ = gamma6_block
    grid = np.deg2rad(np.arange(-90, 91))
    for start in range(0, 60, 10):
        X = Xall[start:start + 10].T
        Y = simulate_capture(X, sc.array, TARGETS, 1.0, 0.0)
        res = iglrt_estimate(Y, X, sc.array, grid, 3, 0.0)
        np.testing.assert_allclose(np.sort(np.rad2deg(res.angles)), [-40, 0, 40], atol=1e-9)


def test_iglrt_threshold_one_returns_nothing(rng):
    arr = ArrayModel(10)
    X = cplx(rng, 10, 10)
    Y = simulate_capture(X, arr, TARGETS, 1.0, 0.1, seed=0)
    assert iglrt_estimate(Y, X, arr, np.deg2rad(np.arange(-90, 91)), 3, 1.0).angles.size == 0


def test_iglrt_single_is_glr_argmax(rng):
    arr = ArrayModel(10)
    grid = np.deg2rad(np.arange(-90, 91))
    for seed in range(5):
        X = cplx(rng, 10, 10)
        Y = simulate_capture(X, arr, [0.25], 0.3, 0.1, seed=seed)
        res = iglrt_estimate(Y, X, arr, grid, 1, 0.0)
        assert res.angles.size == 1
        assert res.angles[0] == grid[np.argmax(glr(Y, X, arr, grid))]


def test_rmse_examples():
    assert rmse_angles([[-40, 0, 40]], [-40, 0, 40]) == 0.0
    assert rmse_angles([[11.0]], [10.0]) == pytest.approx(1.0)
    assert rmse_angles([[40, -40, 0]], [-40, 0, 40]) == 0.0  # order-free
    assert rmse_angles([[]], [0.0], miss_penalty_deg=90) == pytest.approx(90)
    np.testing.assert_allclose(match_errors([1.0, 50.0], [0.0, 45.0, -30.0]), [1.0, 25.0, 8100.0])


def test_roc_endpoints_and_monotone(rng):
    h1, h0 = rng.random(500) ** 0.3, rng.random(500)
    thr = np.linspace(0, 1, 41)
    pfa, pd = roc_curve(h1, h0, thr)
    assert (pfa[0], pd[0]) == (1.0, 1.0)
    assert (pfa[-1], pd[-1]) == (0.0, 0.0)
    assert np.all(np.diff(pfa) <= 0) and np.all(np.diff(pd) <= 0)
    order = np.argsort(pfa, kind="stable")
    assert np.all(np.diff(pd[order]) >= 0)
    assert 0 <= pd_at_pfa(h1, h0, 0.1) <= 1
    with pytest.raises(ValueError):
        roc_curve([], h0, thr)


def test_roc_statistic_noise_saturation(rng):
    arr = ArrayModel(10)
    X = cplx(rng, 10, 10)
    grid = np.deg2rad(np.arange(-90, 91))
    Y = simulate_capture(X, arr, [], [], 0.1, seed=0)
    assert max_glr(Y, X, arr, grid) < 1.0


def test_q_function_oracle():
    xs = np.linspace(-3, 6, 19)
    np.testing.assert_allclose(q_function(xs), norm.sf(xs), rtol=1e-12)
    assert psk_union_bound(0.14109, 0.1) == pytest.approx(2 * norm.sf(np.sqrt(2) * 1.4109), rel=1e-12)
    assert psk_union_bound(0.14109, 0.1) == pytest.approx(0.0460, abs=2e-4)


def test_ser_noise_free_zero(reference_setup, gamma6_block):
    sc, _ = reference_setup
    table, X, _ = gamma6_block
    res = ser_monte_carlo(X, table, sc.channels, 0.0, 5000, seed=0)
    assert res.average == 0.0


def test_ser_within_union_bound(reference_setup, gamma6_block):
    sc, _ = reference_setup
    table, X, beta = gamma6_block
    sigma = np.sqrt(sc.user_noise[0])
    res = ser_monte_carlo(X, table, sc.channels, sc.user_noise, 50_000, seed=1)
    assert res.average <= psk_union_bound(beta, sigma) + 3 * res.std_error


def test_ser_reproducible_and_mismatch(reference_setup, gamma6_block):
    sc, _ = reference_setup
    table, X, _ = gamma6_block
    a = ser_monte_carlo(X, table, sc.channels, sc.user_noise, 30_000, seed=9, batch=7000)
    b = ser_monte_carlo(X, table, sc.channels, sc.user_noise, 30_000, seed=9, batch=7000)
    np.testing.assert_array_equal(a.errors, b.errors)
    with pytest.raises(ValueError):
        ser_monte_carlo(X[:-1], table, sc.channels, 0.01, 10)
