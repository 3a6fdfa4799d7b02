import numpy as np
import pytest

from ddms import chain
from ddms.errors import DomainError, SingularChain
from ddms.experiments import bull_bear_dgp, volatility_dgp
from ddms.models import MeanSwitchParams
from ddms.simulate import SimConfig, holdout_split, simulate, simulate_path


def test_determinism():
    cfg = SimConfig(volatility_dgp(15), 300, 200, seed=5)
    a, b = simulate_path(cfg, 3), simulate_path(cfg, 3)
    assert a.y.tobytes() == b.y.tobytes()
    assert np.array_equal(a.regime, b.regime)
    assert not np.array_equal(a.y, simulate_path(cfg, 4).y)


def test_paths_are_consistent():
    m = volatility_dgp(15)
    p = simulate_path(SimConfig(m, 2000, 200, seed=1))
    assert p.y.shape == p.regime.shape == p.duration.shape == p.sigma2.shape == (2000,)
    assert np.all((p.duration >= 1) & (p.duration <= 15))
    same = p.regime[1:] == p.regime[:-1]
    assert np.all(p.duration[1:][~same] == 1)
    assert np.all(p.duration[1:][same] == np.minimum(p.duration[:-1][same] + 1, 15))
    sds = m.state_sds()
    assert np.allclose(p.sigma2, sds[p.regime * 15 + p.duration - 1] ** 2)
    assert len(p.states) == 2000 and p.states[0] == (p.regime[0], p.duration[0])


def test_absorbing_stay_ramps_duration():
    m = MeanSwitchParams(0, 1, 1, 1, (50.0, 0.0, 50.0, 0.0), tau=4)
    with pytest.raises(SingularChain):
        simulate_path(SimConfig(m, 10, 0))
    p = simulate_path(SimConfig(m, 10, 0, init_state=(1, 1)))
    assert np.all(p.regime == 1)
    assert list(p.duration) == [1, 2, 3, 4, 4, 4, 4, 4, 4, 4]


def test_regime_frequencies_match_stationary_law():
    m = bull_bear_dgp(8)
    pi1 = chain.unconditional_probabilities(m.transition())[8:].sum()
    freqs = np.array([p.regime.mean() for p in simulate(SimConfig(m, 800, 200, seed=11, n_reps=200))])
    se = freqs.std(ddof=1) / np.sqrt(freqs.size)
    assert abs(freqs.mean() - pi1) < 3 * se


def test_transition_frequencies_without_duration_effect():
    p00, p11 = 0.9, 0.7
    g = (np.log(p00 / (1 - p00)), 0.0, np.log(p11 / (1 - p11)), 0.0)
    path = simulate_path(SimConfig(MeanSwitchParams(0, 0, 1, 1, g, tau=3), 100_000, 0, seed=2))
    r = path.regime
    for i, p in ((0, p00), (1, p11)):
        prev = r[:-1] == i
        n = prev.sum()
        phat = np.mean(r[1:][prev] == i)
        assert abs(phat - p) < 3 * np.sqrt(p * (1 - p) / n)


def test_holdout_split():
    y = np.arange(1010.0)
    train, test = holdout_split(y, 10)
    assert train.size == 1000 and test.size == 10 and test[0] == 1000
    assert holdout_split(y, 0)[1].size == 0
    with pytest.raises(DomainError):
        holdout_split(y, 1010)


def test_config_validation():
    with pytest.raises(DomainError):
        SimConfig(bull_bear_dgp(), 0)


def test_frame_export():
    df = simulate_path(SimConfig(bull_bear_dgp(), 5, 0)).to_frame()
    assert list(df.columns) == ["t", "y", "regime", "duration", "sigma2"]
