import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ddms.errors import DomainError
from ddms.links import (LinkKind, LinkSpec, ao_inverse, ao_link, clamp_prob, cloglog_inverse, cloglog_link,
                        logit_inverse, logit_link, stay_probability)

finite_x = st.floats(-30, 30, allow_nan=False)
lams = st.floats(0.05, 10.0)


def test_ao_link_examples():
    assert ao_link(0.5, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert ao_link(0.9, 2.0) == pytest.approx(math.log(49.5), rel=1e-13)
    assert ao_link(0.9, 2.0) == pytest.approx(3.9020, abs=5e-5)


def test_ao_inverse_examples():
    assert ao_inverse(0.0, 1.0) == 0.5
    assert ao_inverse(-1.1, 1.0) == pytest.approx(0.24974, abs=5e-6)
    assert ao_inverse(0.0, 1e-8) == pytest.approx(1 - math.exp(-1), abs=1e-6)


def test_logit_inverse_examples():
    assert logit_inverse(0.0) == 0.5
    assert logit_inverse(-1.1) == pytest.approx(0.24974, abs=5e-6)
    assert abs(logit_inverse(40.0) - 1.0) < 1e-15


@pytest.mark.parametrize("x", [-2.0, 0.0, 3.0])
@pytest.mark.parametrize("lam", [0.5, 1.0, 5.0])
def test_round_trip_examples(x, lam):
    assert ao_link(ao_inverse(x, lam), lam) == pytest.approx(x, abs=1e-10)


def test_no_overflow_at_large_predictor():
    with np.errstate(all="raise"):
        assert ao_inverse(700.0, 0.5) == 1.0
        assert ao_inverse(-700.0, 0.5) >= 0.0
        assert logit_inverse(700.0) == 1.0


def test_domain_errors():
    for bad in (0.0, 1.0, -0.1, 1.2, np.nan):
        with pytest.raises(DomainError):
            ao_link(bad, 1.0)
    for lam in (0.0, -1.0, np.inf):
        with pytest.raises(DomainError):
            ao_inverse(0.3, lam)
    with pytest.raises(DomainError):
        LinkSpec.aranda_ordaz(0.0)
    with pytest.raises(DomainError):
        LinkSpec(LinkKind.LOGIT, 2.0)
    with pytest.raises(DomainError):
        stay_probability(LinkSpec.logit(), 0.0, 0.0, 0, 3)


def test_stay_probability_examples():
    logit = LinkSpec.logit()
    p = stay_probability(logit, -1.8, 0.7, 1, 8)
    assert p == pytest.approx(0.24974, abs=5e-6)
    assert stay_probability(logit, -1.8, 0.7, 12, 8) == stay_probability(logit, -1.8, 0.7, 8, 8)
    assert stay_probability(LinkSpec.aranda_ordaz(1.0), -1.8, 0.7, 1, 8) == pytest.approx(p, abs=1e-15)


@given(finite_x, st.floats(-3, 3), st.integers(1, 30), st.integers(1, 20))
def test_nesting_lambda_one(g1, g2, d, tau):
    a = stay_probability(LinkSpec.aranda_ordaz(1.0), g1, g2, d, tau)
    b = stay_probability(LinkSpec.logit(), g1, g2, d, tau)
    assert abs(a - b) < 1e-12


def test_cloglog_limit():
    x = np.linspace(-5, 5, 2001)
    assert np.max(np.abs(ao_inverse(x, 1e-8) - cloglog_inverse(x))) < 1e-6


@given(lams)
def test_monotone_in_x(lam):
    y = ao_inverse(np.linspace(-20, 8, 400), lam)
    live = y < 1 - 1e-12  # beyond this the result rounds to 1
    assert np.all(np.diff(y[live]) > 0)
    assert np.all(np.diff(y) >= 0)


@given(st.floats(-20, 20), lams)
def test_round_trip_property(x, lam):
    # Outside this range 1 - y is below 1e-4 and the inverse no longer
    # retains enough digits to recover x to 1e-10 in double precision.
    y = ao_inverse(x, lam)
    if 1e-300 < y and 1 - y > 1e-4:
        assert ao_link(y, lam) == pytest.approx(x, abs=1e-10)


@given(st.floats(1e-6, 1 - 1e-6), lams)
def test_link_increasing(y, lam):
    eps = 1e-7
    if y + eps < 1:
        assert ao_link(y + eps, lam) > ao_link(y, lam)


@given(st.floats(-10, 3))
def test_logit_and_cloglog_round_trip(x):
    assert logit_link(logit_inverse(x)) == pytest.approx(x, abs=1e-9)
    assert cloglog_link(cloglog_inverse(x)) == pytest.approx(x, abs=1e-8)


def test_linkspec_helpers():
    ao = LinkSpec.from_name("ao", 0.7)
    assert ao.has_parameter and ao.lam == 0.7
    assert ao.with_lambda(2.0).lam == 2.0
    assert LinkSpec.from_name("logit").lam is None
    assert LinkSpec.cloglog().inverse(0.0) == pytest.approx(1 - math.exp(-1))
    assert ao.link(ao.inverse(0.4)) == pytest.approx(0.4, abs=1e-12)
    assert LinkSpec.from_name("ao", 0.7).to_dict() == {"kind": "ao", "lam": 0.7}


def test_clamp():
    p = clamp_prob(np.array([0.0, 0.5, 1.0]))
    assert p[0] == 1e-12 and p[1] == 0.5 and p[2] == 1 - 1e-12
