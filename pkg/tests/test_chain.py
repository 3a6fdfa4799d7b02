import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ddms import _kernels, chain
from ddms.errors import DomainError, SingularChain
from ddms.links import LinkSpec

gamma = st.tuples(st.floats(-4, 4), st.floats(-1.5, 1.5), st.floats(-4, 4), st.floats(-1.5, 1.5))
links = st.sampled_from([LinkSpec.logit(), LinkSpec.cloglog(), LinkSpec.aranda_ordaz(0.3),
                         LinkSpec.aranda_ordaz(4.0)])


def test_state_indexing_is_bijective():
    for tau in (1, 2, 5, 8):
        assert chain.n_states(tau) == 2 * tau
        idx = [chain.state_index(r, d, tau) for r in (0, 1) for d in range(1, tau + 1)]
        assert idx == list(range(2 * tau))
        assert all(chain.state_of(i, tau) == (i // tau, i % tau + 1) for i in idx)
    with pytest.raises(DomainError):
        chain.state_index(0, 4, 3)


def test_next_duration_examples():
    assert chain.next_duration(3, True, 8) == 4
    assert chain.next_duration(8, True, 8) == 8
    assert chain.next_duration(8, False, 8) == 1
    with pytest.raises(DomainError):
        chain.next_duration(9, True, 8)


def test_dimension_and_sparsity():
    P = chain.build_transition_matrix(LinkSpec.logit(), (-1.8, 0.7, -0.8, 0.6), 8)
    assert P.matrix.shape == (16, 16)
    assert np.all((P.matrix > 0).sum(axis=0) == 2)
    # the entry for staying in (0, 1) is the stay probability at d = 1
    assert P.matrix[chain.state_index(0, 2, 8), chain.state_index(0, 1, 8)] == pytest.approx(0.24974, abs=5e-6)


@given(gamma, links, st.integers(1, 10))
def test_columns_sum_to_one(g, link, tau):
    P = chain.build_transition_matrix(link, g, tau).matrix
    assert np.allclose(P.sum(axis=0), 1.0, atol=1e-12, rtol=0)
    assert np.all(P >= 0)


def test_matches_compiled_kernel(rng):
    for tau in (1, 3, 7):
        stay = rng.random((2, tau))
        assert np.array_equal(chain.transition_from_stay(stay).matrix, _kernels.dense_transition(stay))


def test_collapse_without_duration_effect():
    P = chain.build_transition_matrix(LinkSpec.logit(), (0.4, 0.0, -0.3, 0.0), 4)
    stay = P.stay
    assert np.allclose(stay[0], stay[0, 0]) and np.allclose(stay[1], stay[1, 0])
    pi = chain.unconditional_probabilities(P)
    p, q = stay[0, 0], stay[1, 0]
    two_state = np.array([1 - q, 1 - p]) / (2 - p - q)
    assert np.allclose(pi.reshape(2, 4).sum(axis=1), two_state, atol=1e-12)


def test_saturation_is_absorbing_and_singular():
    P = chain.build_transition_matrix(LinkSpec.logit(), (40.0, 0.0, 40.0, 0.0), 3)
    assert np.all(np.abs(P.stay - 1.0) < 1e-15)
    rc = chain.reciprocal_condition(chain.gram_matrix(P))
    assert rc < 1e-9
    with pytest.raises(SingularChain) as err:
        chain.unconditional_probabilities(P)
    assert err.value.rcond < 1e-9


def test_symmetric_tau_one():
    P = chain.build_transition_matrix(LinkSpec.logit(), (0.0, 0.0, 0.0, 0.0), 1)
    assert np.allclose(chain.unconditional_probabilities(P), [0.5, 0.5], atol=1e-14)


def test_power_iteration_oracle():
    P = chain.transition_from_stay(np.full((2, 2), 0.5))
    xi = np.array([1.0, 0.0, 0.0, 0.0])
    for _ in range(10_000):
        xi = P.matrix @ xi
    assert np.allclose(chain.unconditional_probabilities(P), xi, atol=1e-8)


def test_reciprocal_condition_examples():
    assert chain.reciprocal_condition(np.eye(4)) == 1.0
    assert chain.reciprocal_condition(np.diag([1.0, 1e-12])) == pytest.approx(1e-12, rel=1e-10)
    assert chain.reciprocal_condition(np.zeros((2, 2))) == 0.0


@given(gamma, links, st.integers(1, 8))
def test_stationary_fixed_point(g, link, tau):
    P = chain.build_transition_matrix(link, g, tau)
    try:
        pi = chain.unconditional_probabilities(P)
    except SingularChain:
        return
    assert abs(pi.sum() - 1) < 1e-10 and np.all(pi >= 0)
    assert np.max(np.abs(P.matrix @ pi - pi)) < 1e-8


@given(gamma, st.integers(1, 8))
def test_kernel_stationary_agrees(g, tau):
    P = chain.build_transition_matrix(LinkSpec.logit(), g, tau)
    pi_k, rc = _kernels.stationary(np.ascontiguousarray(P.stay), chain.RCOND_MIN)
    try:
        pi = chain.unconditional_probabilities(P)
    except SingularChain:
        return
    if rc > 1e-6:
        assert np.allclose(pi_k, pi, atol=1e-8)
    assert rc == pytest.approx(chain.reciprocal_condition(chain.gram_matrix(P)), rel=1e-3, abs=1e-12)
