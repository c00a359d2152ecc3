import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gainloss.preferences import PreferenceParams, m, mu, weight_contemp, weight_prosp
from gainloss.processes import DomainError


def test_defaults():
    p = PreferenceParams()
    assert (p.beta, p.theta, p.b, p.lam, p.gamma) == (0.98, 4.0, 1.0, 2.0, 0.1)
    assert p.replace(**{"lambda": 3}).lam == 3


@pytest.mark.parametrize("kw", [dict(beta=1.0), dict(beta=0.0), dict(theta=0.0), dict(b=-0.1),
                                dict(lam=0.99), dict(gamma=-1e-9)])
def test_param_domain(kw):
    with pytest.raises(DomainError):
        PreferenceParams(**kw)


def test_m_examples():
    assert m(1.0, 1) == 0.0
    assert m(2.0, 2) == -0.5
    assert m(1.05, 4) == pytest.approx(1.05 ** -3 / -3, rel=1e-15)
    with pytest.raises(DomainError):
        m(0.0, 4)


def test_mu_examples():
    assert mu(0.0, 7) == 0.0
    assert mu(-2.0, 2) == -4.0
    assert mu(3.0, 5) == 3.0


def test_weight_examples():
    for F in (0.0, 0.3, 1.0):
        assert weight_contemp(PreferenceParams(b=0.0), F) == 1.0
        assert weight_contemp(PreferenceParams(b=1.0, lam=1.0), F) == 2.0
        assert weight_prosp(PreferenceParams(lam=1.0), F) == 1.0
    assert weight_contemp(PreferenceParams(b=1, lam=2), 0.5) == 2.5
    assert weight_prosp(PreferenceParams(lam=2), 0.0) == 2.0
    assert weight_prosp(PreferenceParams(lam=3), 0.25) == 2.5
    with pytest.raises(DomainError):
        weight_contemp(PreferenceParams(), 1.1)
    with pytest.raises(DomainError):
        weight_prosp(PreferenceParams(), -0.1)


# ---------------------------------------------------------------- properties

bs = st.floats(min_value=0, max_value=10)
lams = st.floats(min_value=1, max_value=10)
Fs = st.floats(min_value=0, max_value=1)


@given(bs, lams, Fs)
def test_contemp_is_one_plus_b_prosp(b, lam, F):
    p = PreferenceParams(b=b, lam=lam)
    assert weight_contemp(p, F) == pytest.approx(1 + b * weight_prosp(p, F), rel=1e-15, abs=1e-15)


@given(bs, lams, Fs, Fs)
def test_weights_monotone_and_bounded(b, lam, F1, F2):
    p = PreferenceParams(b=b, lam=lam)
    lo, hi = min(F1, F2), max(F1, F2)
    assert weight_contemp(p, hi) <= weight_contemp(p, lo) + 1e-15
    assert weight_prosp(p, hi) <= weight_prosp(p, lo) + 1e-15
    for F in (F1, F2):
        L, G = weight_contemp(p, F), weight_prosp(p, F)
        assert 1 + b - 1e-12 <= L <= 1 + b * lam + 1e-12
        assert 1 - 1e-15 <= G <= lam + 1e-15


@given(bs, lams, Fs, Fs, st.floats(min_value=0, max_value=1))
def test_weights_affine(b, lam, F1, F2, t):
    p = PreferenceParams(b=b, lam=lam)
    Fm = t * F1 + (1 - t) * F2
    want = t * weight_contemp(p, F1) + (1 - t) * weight_contemp(p, F2)
    assert weight_contemp(p, Fm) == pytest.approx(want, rel=1e-12, abs=1e-12)


@given(st.floats(min_value=0.1, max_value=10))
def test_m_increasing_concave(theta):
    x = np.geomspace(0.2, 5.0, 60)
    v = m(x, theta)
    slope = np.diff(v) / np.diff(x)
    assert np.all(slope > 0)
    # concavity: slopes between consecutive chords fall
    assert np.all(np.diff(slope) < 0)


@given(st.floats(min_value=-1e6, max_value=1e6), st.floats(min_value=1e-3, max_value=1e3), lams)
def test_mu_homogeneous(x, t, lam):
    assert mu(t * x, lam) == pytest.approx(t * mu(x, lam), rel=1e-12, abs=1e-300)


@given(lams)
def test_mu_continuous_at_zero(lam):
    assert abs(mu(1e-12, lam) - mu(-1e-12, lam)) <= 2 * (1 + lam) * 1e-12
