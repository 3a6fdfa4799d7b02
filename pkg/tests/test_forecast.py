import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ddms import chain, forecast
from ddms.errors import DomainError
from ddms.experiments import volatility_dgp
from ddms.filtering import run_filter
from ddms.models import DurationVolParams
from ddms.simulate import SimConfig, simulate_path


@pytest.fixture(scope="module")
def model():
    return volatility_dgp(5)


def test_identity_chain_keeps_xi():
    xi = np.array([0.1, 0.2, 0.3, 0.4])
    out = forecast.forecast_states(np.eye(4), xi, 6)
    assert np.allclose(out, np.tile(xi, (6, 1)), atol=0)


def test_one_step_matches_filter(model):
    y = simulate_path(SimConfig(model, 300, 50, seed=3)).y
    out = run_filter(model, y)
    P = model.transition()
    for t in (0, 50, 298):
        step = forecast.forecast_states(P, out.filtered[t], 1)[0]
        assert np.allclose(step, out.predictive[t + 1], rtol=0, atol=1e-12)


def test_long_horizon_reaches_stationary(model):
    P = model.transition()
    xi = np.zeros(P.n)
    xi[0] = 1.0
    out = forecast.forecast_states(P, xi, 10_000)
    pi = chain.unconditional_probabilities(P)
    assert np.max(np.abs(out[-1] - pi)) < 1e-6


@given(st.integers(1, 6), st.integers(1, 30), st.integers(0, 2**31 - 1))
def test_rows_are_distributions(tau, h, seed):
    rng = np.random.default_rng(seed)
    m = DurationVolParams(1.0, 1.3, -0.01, 0.02, tuple(rng.uniform(-2, 2, 4)), tau=tau)
    xi = rng.dirichlet(np.ones(2 * tau))
    path = forecast.forecast_path(m, xi, h)
    assert np.allclose(path.state_probs.sum(axis=1), 1.0, atol=1e-10)
    assert np.all(path.sigma2_hat >= 0)
    assert path.horizons.tolist() == list(range(1, h + 1))
    assert np.allclose(path.regime_probs().sum(axis=1), 1.0)


def test_sigma2_examples():
    m = DurationVolParams(1.0, 1.3, -0.01, 0.02, tau=10)
    p = np.zeros(20)
    p[chain.state_index(0, 10, 10)] = 1.0
    assert forecast.forecast_sigma2(m, p) == pytest.approx(0.6561, abs=1e-12)
    v = m.state_variances()
    p = np.zeros(20)
    p[[3, 14]] = 0.5
    assert forecast.forecast_sigma2(m, p) == pytest.approx((v[3] + v[14]) / 2, rel=1e-14)
    flat = DurationVolParams(1.2, 1.2, 0.0, 0.0, tau=4)
    rng = np.random.default_rng(0)
    assert forecast.forecast_sigma2(flat, rng.dirichlet(np.ones(8))) == pytest.approx(1.2 ** 4, rel=1e-13)


def test_tower_property(model, rng):
    """Exact state propagation equals the Monte Carlo mean of simulated variances."""
    P = model.transition().matrix
    v = model.state_variances()
    xi = rng.dirichlet(np.ones(P.shape[0]))
    h = 5
    exact = forecast.forecast_path(model, xi, h).sigma2_hat
    n_paths = 100_000
    cum = np.cumsum(P, axis=0)  # column j: CDF of the next state given j
    s = rng.choice(P.shape[0], size=n_paths, p=xi)
    for k in range(h):
        u = rng.random(n_paths)
        s = np.minimum((u[:, None] > cum[:, s].T).sum(axis=1), P.shape[0] - 1)
        draws = v[s]
        se = draws.std(ddof=1) / np.sqrt(n_paths)
        assert abs(draws.mean() - exact[k]) < 3 * se + 1e-12


def test_forecast_input_errors(model):
    P = model.transition()
    with pytest.raises(DomainError):
        forecast.forecast_states(P, np.full(P.n, 1.0 / P.n), 0)
    with pytest.raises(DomainError):
        forecast.forecast_states(P, np.ones(P.n), 2)
    with pytest.raises(DomainError):
        forecast.forecast_sigma2(model, np.ones(3) / 3)


def test_mape_examples():
    truths = np.array([0.5, 1.0, 3.0])
    assert forecast.mape(truths, truths) == 0.0
    assert forecast.mape(1.1 * truths, truths) == pytest.approx(0.1, rel=1e-12)
    assert forecast.mape([1.0, 2.0], [2.0, 2.0]) == pytest.approx(0.25)
    assert forecast.mape([1.0, 2.0, 9.0], [2.0, 2.0, 1.0], h=2) == pytest.approx(0.25)
    assert np.allclose(forecast.mape_curve([1.0, 2.0], [2.0, 2.0]), [0.5, 0.25])


def test_mape_errors():
    with pytest.raises(DomainError):
        forecast.mape([1.0], [0.0])
    with pytest.raises(DomainError):
        forecast.mape([1.0, 2.0], [1.0])
    with pytest.raises(DomainError):
        forecast.mape([1.0, 2.0], [1.0, 1.0], h=3)


def test_mape_difference_sign():
    assert forecast.mape_difference(0.2, 0.2) == 0.0
    assert forecast.mape_difference(0.30, 0.20) == pytest.approx(0.10)
    assert np.allclose(forecast.mape_difference(np.array([0.3, 0.1]), np.array([0.2, 0.2])), [0.1, -0.1])
