import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from exdomains.kernels import (
    KernelEvalConfig,
    asymptotic_coefficients,
    kernel_asymptotic,
    kernel_F,
    kernel_G,
    kernel_G0,
    kernel_G1,
    kernel_G_theta,
    kernel_g,
    kernel_g_G0,
    kernel_g_G0_elliptic,
    kernel_mass,
    kernel_tail_integral,
)

# 40-digit values from mpmath (g via E(m), G0 and G1 via adaptive theta quadrature)
FROZEN = {
    # t: (g, G0, G1)
    0.5: (0.51848679779798056289, 3.4175310449875850925, 2.6998705331433038941),
    1.0: (0.52703671631912601847, 1.9296647746803423573, 1.2388479589612517804),
    3.0: (0.39991488315952167246, 0.30675182235206817008, 0.071895295897684572897),
}


def test_g_at_zero():
    assert kernel_g(0.0) == 0.5


@pytest.mark.parametrize("t", [0.0, 0.01, 0.5, 2.0, 10.0, 100.0])
def test_g_lower_bound(t):
    assert kernel_g(t) >= 1.0 / np.sqrt(4.0 + t * t)


def test_g_flat_at_zero():
    h = 1e-4
    d = (kernel_g(2 * h) - kernel_g(0.0)) / (2 * h)
    assert abs(d) <= 1e-3


def test_g_first_differences_converge():
    # C^1: difference quotients settle as h -> 0
    t = np.linspace(0.0, 10.0, 21)
    prev = None
    for h in (1e-2, 1e-3, 1e-4):
        d = (kernel_g(t + h) - kernel_g(t)) / h
        if prev is not None:
            assert np.max(np.abs(d - prev)) < 0.05
        prev = d


@pytest.mark.parametrize("t", sorted(FROZEN))
def test_kernels_match_frozen_oracle(t):
    g, G0, G1 = FROZEN[t]
    assert kernel_g(t) == pytest.approx(g, rel=1e-13)
    assert kernel_G(t) == pytest.approx(4 * g / t**2, rel=1e-13)
    assert kernel_G0(t) == pytest.approx(G0, rel=1e-12)
    assert kernel_G1(t) == pytest.approx(G1, rel=1e-12)


def test_G_even_and_decay():
    t = np.array([0.3, 1.0, 7.0, 25.0])
    assert np.array_equal(kernel_G(t), kernel_G(-t))
    assert 10.0**3 * kernel_G(10.0) < 2 * np.pi + 0.1


def test_G_paths_agree():
    t = np.linspace(0.1, 20.0, 60)
    assert np.allclose(2 * kernel_g(t), t**2 * kernel_G_theta(t) / 2, rtol=1e-9, atol=0)
    assert kernel_G(1.0) == pytest.approx(kernel_G_theta(1.0), rel=1e-10)


def test_G_singular_at_zero():
    with pytest.raises(ValueError):
        kernel_G(0.0)
    with pytest.raises(ValueError):
        kernel_g(-1.0)


def test_log_kernels_infinite_at_zero():
    assert np.isinf(kernel_G0(0.0)) and np.isinf(kernel_G1(0.0))


@pytest.mark.parametrize("fn", [kernel_G0, kernel_G1, kernel_F])
def test_moment_kernels_even(fn):
    t = np.array([0.05, 0.7, 3.0, 40.0])
    assert np.array_equal(fn(t), fn(-t))


def test_F_definition():
    t = 0.7
    assert kernel_F(t) == pytest.approx(kernel_G0(t) - 0.75 * kernel_G1(t), rel=1e-15)


@pytest.mark.parametrize("name,mass", [("G0", 4 * np.pi), ("G1", 8 * np.pi / 3)])
def test_masses(name, mass):
    assert abs(kernel_mass(name) - mass) <= 1e-8


def test_mass_of_F():
    assert abs(kernel_mass("F") - (4 * np.pi - 2 * np.pi)) <= 1e-8


@pytest.mark.parametrize("name,fn", [("G", kernel_G), ("G0", kernel_G0), ("G1", kernel_G1),
                                     ("F", kernel_F)])
def test_asymptotic_expansion(name, fn):
    t = np.array([6.0, 20.0, 60.0])
    assert np.allclose(kernel_asymptotic(name, t, 40), fn(t), rtol=1e-12, atol=0)
    # convergent but slow just above the radius |t| = 2
    assert kernel_asymptotic(name, 3.0, 80) == pytest.approx(fn(3.0), rel=1e-10)


def test_asymptotic_leading_terms():
    lead, c = asymptotic_coefficients("G")
    assert lead == 3 and c[0] == pytest.approx(2 * np.pi)
    lead0, c0 = asymptotic_coefficients("G0")
    assert lead0 == 3 and c0[0] == pytest.approx(4 * np.pi)


def test_tail_integral_against_quadrature():
    from scipy.integrate import quad

    ref = quad(lambda t: float(kernel_G(t)), 10.0, np.inf, epsabs=1e-14, epsrel=1e-12)[0]
    assert kernel_tail_integral("G", 10.0, 20) == pytest.approx(ref, rel=1e-9)


def test_elliptic_path_matches_theta_path():
    x = np.geomspace(1e-6, 200.0, 300)
    g1, G1 = kernel_g_G0(x, theta_nodes=128)
    g2, G2 = kernel_g_G0_elliptic(x)
    assert np.max(np.abs(g1 / g2 - 1)) < 1e-12
    assert np.max(np.abs(G1 / G2 - 1)) < 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        KernelEvalConfig(theta_nodes=4)
    with pytest.raises(ValueError):
        KernelEvalConfig(tail_truncation=0.0)


@given(st.floats(min_value=0.0, max_value=1e3))
def test_g_between_bounds(t):
    # the elliptic integral factor lies in [1, pi/2]
    r = kernel_g(t) * np.sqrt(4.0 + t * t)
    assert 1.0 - 1e-13 <= r <= np.pi / 2 + 1e-13


@given(st.floats(min_value=1e-3, max_value=100.0))
def test_G_from_g_identity(t):
    assert kernel_G(t) * t * t == pytest.approx(4 * kernel_g(t), rel=1e-14)


@given(st.floats(min_value=1e-300, max_value=1e3))
def test_G0_matches_elliptic_form_everywhere(t):
    assert kernel_G0(t) == pytest.approx(kernel_g_G0_elliptic(np.array([t]))[1][0], rel=1e-12)


@pytest.mark.parametrize("t", [1e-31, 1e-29])
def test_small_t_limits_continuous(t):
    # the closed-form limit below the switch and the quadrature above agree
    assert kernel_G1(t) == pytest.approx(2 * np.log(8 / t) - 8 / 3, rel=1e-14)
    assert kernel_G0(t) == pytest.approx(2 * np.log(8 / t) - 2, rel=1e-14)
