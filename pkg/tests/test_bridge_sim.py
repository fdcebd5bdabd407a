import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oubridge import BridgeSpec, DomainError, OuParams
from oubridge.bridge_sim import (
    StabilityError,
    bridge_drift,
    drift_coefficients,
    euler_grid_ok,
    euler_noise_shape,
    exact_noise_shape,
    reduce_random_start,
    simulate_bridge,
    simulate_euler,
    simulate_exact,
)
from oubridge.grid import TimeGrid
from oubridge.oracle import empirical_cov
from oubridge.ou_model import bridge_cov, bridge_mean


def rng(seed=0):
    return np.random.Generator(np.random.Philox(seed))


def test_drift_coefficients_limits():
    tau = np.array([1e-3, 0.1, 1.0, 10.0])
    a, b = drift_coefficients(0.0, tau)
    assert np.allclose(a, 1 / tau) and np.allclose(b, 1 / tau)
    a, b = drift_coefficients(2.0, tau)
    assert np.allclose(a, 2 / np.tanh(2 * tau), rtol=1e-13)
    assert np.allclose(b, 2 / np.sinh(2 * tau), rtol=1e-13)
    # sign of theta does not matter
    a2, b2 = drift_coefficients(-2.0, tau)
    assert np.allclose(a, a2) and np.allclose(b, b2)


@given(st.floats(-5, 5), st.floats(1e-4, 5))
def test_drift_coefficients_continuous(theta, tau):
    a, b = drift_coefficients(theta, tau)
    x = abs(theta) * tau
    if x > 1e-3:
        assert math.isclose(float(a), abs(theta) / math.tanh(x), rel_tol=1e-10)
        assert math.isclose(float(b), abs(theta) / math.sinh(x), rel_tol=1e-10)
    assert a >= b > 0


def test_drift_domain():
    spec = BridgeSpec(OuParams(), 1.0)
    with pytest.raises(DomainError):
        bridge_drift(spec, 0.0, 1.0)
    assert bridge_drift(spec, 0.0, 0.0) > 0


def test_noise_shapes():
    g = TimeGrid.uniform(1.0, 11)
    assert euler_noise_shape(g) == (9,)
    assert euler_noise_shape(g, 4) == (4, 9)
    assert exact_noise_shape(g, 4) == (4, 10)


def test_euler_pinned_and_deterministic():
    spec = BridgeSpec(OuParams(theta=1.0), 1.0)
    g = TimeGrid.uniform(1.0, 257)
    noise = rng().standard_normal(euler_noise_shape(g, 50))
    a = simulate_euler(spec, g, noise)
    b = simulate_euler(spec, g, noise)
    assert np.array_equal(a.values, b.values)
    assert np.all(a.values[:, -1] == 1.0)
    assert np.all(a.values[:, 0] == 0.0)


def test_euler_rejects_general_params():
    spec = BridgeSpec(OuParams(sigma0=0.5), 0.0)
    g = TimeGrid.uniform(1.0, 11)
    with pytest.raises(ValueError):
        simulate_euler(spec, g, np.zeros(9))


def test_euler_wrong_noise_length():
    spec = BridgeSpec(OuParams(), 0.0)
    with pytest.raises(ValueError):
        simulate_euler(spec, TimeGrid.uniform(1.0, 11), np.zeros(10))


def test_stability_error_names_step():
    spec = BridgeSpec(OuParams(theta=50.0, T=1.0), 0.0)
    g = TimeGrid.uniform(1.0, 11)
    assert not euler_grid_ok(spec.params, g)
    with pytest.raises(StabilityError, match="step"):
        simulate_euler(spec, g, np.zeros(9))


def test_noiseless_euler_close_to_mean():
    spec = BridgeSpec(OuParams(theta=1.5), 2.0)
    g = TimeGrid.uniform(1.0, 4097)
    path = simulate_euler(spec, g, np.zeros(euler_noise_shape(g)))
    assert np.max(np.abs(path.values - bridge_mean(spec, g.points))) < 2e-3


def test_reduce_random_start_deterministic_prior():
    p = OuParams(theta=1.0, mu=-1.0, x0=0.5, T=2.0)
    x0, zc = reduce_random_start(BridgeSpec(p, 1.0), 0.3)
    assert x0 == 0.5
    e = math.exp(-2.0)
    assert math.isclose(zc, 1.0 - 0.5 * e + 1.0 * (1 - e), rel_tol=1e-14)


def test_random_start_variance():
    p = OuParams(theta=1.0, mu=-1.0, sigma=1.0, sigma0=math.sqrt(0.5), T=10.0)
    spec = BridgeSpec(p, 1.0)
    u = rng(3).standard_normal(200_000)
    x0, _ = reduce_random_start(spec, u)
    v = float(bridge_cov(p, 0.0, 0.0))
    se = v * math.sqrt(2 / (u.size - 1))
    assert abs(x0.var(ddof=1) - v) < 3 * se
    assert abs(x0.mean() - float(bridge_mean(spec, 0.0))) < 3 * math.sqrt(v / u.size)


def test_simulate_bridge_law():
    p = OuParams(theta=0.8, mu=0.5, sigma=1.2, sigma0=0.6, x0=-0.3, T=1.0)
    spec = BridgeSpec(p, 1.5)
    g = TimeGrid.uniform(1.0, 513)
    n = 40_000
    r = rng(5)
    paths = simulate_bridge(spec, g, r.standard_normal(n), r.standard_normal(euler_noise_shape(g, n)))
    assert np.all(paths.values[:, -1] == 1.5)
    idx = [0, 128, 256, 384]
    X = paths.values[:, idx]
    t = g.points[idx]
    m_se = X.std(axis=0, ddof=1) / math.sqrt(n)
    assert np.all(np.abs(X.mean(axis=0) - bridge_mean(spec, t)) < 4 * m_se)
    C = np.cov(X.T)
    ref = bridge_cov(p, t[:, None], t[None, :])
    assert np.max(np.abs(C - ref)) < 0.02


def test_exact_sampler_covariance():
    p = OuParams(theta=-0.5, sigma0=1.0)
    spec = BridgeSpec(p, 0.7)
    g = TimeGrid.uniform(1.0, 21)
    paths = simulate_exact(spec, g, rng(7).standard_normal(exact_noise_shape(g, 100_000)))
    K, mean = empirical_cov(paths)
    t = g.points
    assert np.max(np.abs(K.matrix - bridge_cov(p, t[:, None], t[None, :]))) < 0.02
    assert np.max(np.abs(mean - bridge_mean(spec, t))) < 0.02
    assert np.all(paths.values[:, -1] == 0.7)


def test_exact_sampler_grid_limit():
    spec = BridgeSpec(OuParams(), 0.0)
    g = TimeGrid.uniform(1.0, 2001)
    with pytest.raises(ValueError):
        simulate_exact(spec, g, np.zeros(2000))
