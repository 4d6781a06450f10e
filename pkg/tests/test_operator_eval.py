import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad as scipy_quad

from exdomains.dispersion import dispersion_V
from exdomains.operator_eval import (
    DEFAULT_QUAD,
    QuadratureError,
    QuadratureSpec,
    equilibrium_residual,
    h_direct,
    h_regularized,
    residual_grid,
    self_check,
)
from exdomains.profile import PeriodicProfile, ProfileError

TWO_PI = 2 * np.pi
S_SAMPLES = np.array([0.0, 0.4, np.pi / 3, 2.0, np.pi])


@pytest.mark.parametrize("lam", [0.3, 0.5, 1.0, 2.0, 5.0])
def test_constant_regularized(lam):
    h = h_regularized(PeriodicProfile.constant(lam), S_SAMPLES)
    assert np.max(np.abs(h + TWO_PI)) <= 1e-8


@pytest.mark.parametrize("lam", [0.3, 0.5, 1.0, 2.0, 5.0])
def test_constant_direct(lam):
    h = h_direct(PeriodicProfile.constant(lam), [0.0, 1.1])
    assert np.max(np.abs(h + TWO_PI)) <= 1e-7


def test_beta_identity():
    val, _ = scipy_quad(lambda t: (1 + t * t) ** -1.5, 0, np.inf, epsabs=1e-14)
    assert val == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("s", [0.0, np.pi / 3])
def test_small_cosine_pair(s):
    p = PeriodicProfile([1.0, 0.05])
    assert h_regularized(p, s) == pytest.approx(h_direct(p, s), abs=1e-6)


def test_small_cosine_matches_linearization():
    # H(1 + e cos) = -2 pi - e V(1) cos(s) + O(e^2): the remainder must scale by 4 under halving
    s = np.array([0.0, 1.0, 2.5])
    rem = []
    for eps in (0.02, 0.01, 0.005, 0.0025):
        h = h_regularized(PeriodicProfile([1.0, eps]), s)
        rem.append(h + TWO_PI + eps * dispersion_V(1.0) * np.cos(s))
    rem = np.array(rem)
    ratios = rem[:-1] / rem[1:]
    assert np.allclose(ratios, 4.0, rtol=5e-2)
    # the O(e^3) correction halves with e
    dev = np.abs(ratios - 4.0)
    assert np.all(dev[-1] < 0.6 * dev[0])


def test_corpus_oracle_agreement(profile_corpus):
    s = np.array([0.0, 1.3, np.pi])
    for p in profile_corpus:
        hr = h_regularized(p, s)
        hd = h_direct(p, s)
        assert np.all(np.abs(hr - hd) <= 1e-6 * (1 + np.abs(hr)))


def test_corpus_doubling(profile_corpus):
    s = np.linspace(0, np.pi, 9)
    for p in profile_corpus:
        _, change = self_check(p, s)
        assert change < DEFAULT_QUAD.target_rel_error


def test_self_check_direct_small():
    _, change = self_check(PeriodicProfile([1.0, 0.1, 0.02]), [0.5], method="direct")
    assert change < 1e-8


def test_self_check_raises_on_coarse_rule():
    coarse = QuadratureSpec(theta_nodes=4, t_panels=4, t_nodes=2, t_cap=1.0, target_rel_error=1e-14)
    with pytest.raises(QuadratureError):
        self_check(PeriodicProfile([1.0, 0.3, 0.1]), [0.3], coarse)


def test_evenness_at_paired_points(profile_corpus):
    s = np.linspace(0.1, 3.0, 7)
    for p in profile_corpus[:5]:
        assert np.allclose(h_regularized(p, s), h_regularized(p, -s), atol=1e-12)


def test_periodicity():
    p = PeriodicProfile([1.2, 0.1, -0.05, 0.02])
    s = np.array([0.3, 1.7])
    assert np.allclose(h_regularized(p, s), h_regularized(p, s + TWO_PI), atol=1e-12)


def test_shift_of_profile():
    # phi(t + pi) swaps the sign of odd modes; H shifts accordingly
    a = np.array([1.0, 0.1, 0.05, -0.03])
    b = a * np.array([1, -1, 1, -1])
    s = np.array([0.2, 1.1])
    h1 = h_regularized(PeriodicProfile(a), s + np.pi)
    h2 = h_regularized(PeriodicProfile(b), s)
    assert np.allclose(h1, h2, atol=1e-12)


@pytest.mark.parametrize("lam,k", [(0.5, 1), (2.0, 1), (3.0, 2), (0.7, 3)])
def test_first_order_term(lam, k):
    # d/de H(lam + e cos(k .)) = -V(lam k) / lam cos(k .), central difference at tiny e
    eps = 1e-4
    a = np.zeros(k + 1)
    a[0] = lam
    a[k] = eps
    hp = h_regularized(PeriodicProfile(a), 0.0)
    a[k] = -eps
    hm = h_regularized(PeriodicProfile(a), 0.0)
    assert (hp - hm) / (2 * eps) == pytest.approx(-dispersion_V(lam * k) / lam, rel=1e-6, abs=1e-7)


def test_equilibrium_residual_constant():
    r = equilibrium_residual(PeriodicProfile.constant(0.8), 33)
    assert r.shape == (33,)
    assert np.max(np.abs(r)) <= 1e-8


def test_residual_grid():
    g = residual_grid(5)
    assert g[0] == 0.0 and g[-1] == np.pi and g.size == 5
    with pytest.raises(ValueError):
        residual_grid(1)


def test_positivity_required():
    with pytest.raises(ProfileError):
        h_regularized(PeriodicProfile([0.1, 0.2]), 0.0)
    with pytest.raises(ProfileError):
        h_direct(PeriodicProfile([0.1, 0.2]), 0.0)


def test_scalar_and_array_shapes():
    p = PeriodicProfile([1.0, 0.1])
    assert isinstance(h_regularized(p, 0.3), float)
    assert h_regularized(p, np.zeros((2, 3))).shape == (2, 3)


@pytest.mark.parametrize("field", ["theta_nodes", "t_panels", "t_nodes", "t_cap", "target_rel_error"])
def test_quadrature_spec_validation(field):
    with pytest.raises(ValueError):
        QuadratureSpec(**{field: 0})


def test_doubled():
    d = DEFAULT_QUAD.doubled()
    assert d.theta_nodes == 2 * DEFAULT_QUAD.theta_nodes
    assert d.t_nodes == 2 * DEFAULT_QUAD.t_nodes


@settings(max_examples=15)
@given(
    st.floats(0.4, 3.0),
    st.lists(st.floats(-1, 1), min_size=1, max_size=5),
    st.floats(0, np.pi),
)
def test_regularized_even_property(a0, tail, s):
    c = np.asarray(tail)
    c = 0.25 * a0 * c / max(1.0, np.sum(np.abs(c)))
    p = PeriodicProfile(np.concatenate([[a0], c]))
    assert h_regularized(p, s) == pytest.approx(h_regularized(p, -s), abs=1e-11)
