import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from exdomains.dispersion import (
    BRACKET,
    CriticalRadius,
    DispersionPoint,
    dispersion_components,
    dispersion_components_quadrature,
    dispersion_point,
    dispersion_V,
    dispersion_V_prime,
    dispersion_V_quadrature,
    eigenvalue,
    find_lambda_star,
    zero_condition,
)
from exdomains.special_functions import bessel_i, bessel_k

# 30-digit mpmath values of 4 pi rho I1 (rho K1 - K0), its derivative and its root
LAMBDA_STAR = 0.59504672644978429289
V_REF = {
    0.25: (-0.23934505932311428472, -0.59922384489709061831),
    1.0: (1.2846293636105757008, 4.1624480014702148326),
    2.0: (6.6297120531739259329, 5.9863641631056565338),
    10.0: (56.626104159351039753, 6.2756792812452045469),
    50.0: (307.89177974797326982, 6.2828716447601290095),
}


@pytest.mark.parametrize("rho", sorted(V_REF))
def test_V_and_derivative_frozen(rho):
    v, vp = V_REF[rho]
    assert dispersion_V(rho) == pytest.approx(v, rel=1e-13)
    assert dispersion_V_prime(rho) == pytest.approx(vp, rel=1e-12)


def test_V_alternative_closed_form():
    rho = np.geomspace(1e-3, 50, 200)
    i0, i1 = bessel_i(0, rho), bessel_i(1, rho)
    k0, k1 = bessel_k(0, rho), bessel_k(1, rho)
    alt = 4 * np.pi * rho**2 * i1 * k1 + 4 * np.pi * rho * i0 * k1 - 4 * np.pi
    assert np.allclose(dispersion_V(rho), alt, rtol=0, atol=1e-10 * (1 + np.abs(alt)).max())


def test_V_limits():
    assert dispersion_V(0.25) < 0
    assert abs(dispersion_V(1e-4)) < 1e-3
    assert abs(dispersion_V(200.0) / 200.0 - 2 * np.pi) < 0.05


def test_V_over_rho_trend():
    gaps = [abs(dispersion_V(r) / r - 2 * np.pi) for r in (50.0, 100.0, 200.0)]
    assert gaps[0] > gaps[1] > gaps[2]


@pytest.mark.parametrize("rho", [1.0, 0.6, 0.05, 7.0])
def test_V_prime_against_fd(rho):
    h = 1e-6
    fd = (dispersion_V(rho + h) - dispersion_V(rho - h)) / (2 * h)
    assert abs(dispersion_V_prime(rho) - fd) < 1e-5


def test_V_prime_positive_at_root(lambda_star):
    assert dispersion_V_prime(lambda_star) > 0


@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan])
def test_domain_errors(bad):
    with pytest.raises(ValueError):
        dispersion_V(bad)
    with pytest.raises(ValueError):
        dispersion_V_prime(bad)
    with pytest.raises(ValueError):
        dispersion_components(bad)


def test_component_identity():
    rho = np.geomspace(1e-3, 50, 500)
    V1, V2, V3 = dispersion_components(rho)
    assert np.max(np.abs(V1 + V2 - V3 - 2 * np.pi - dispersion_V(rho))) < 1e-10


@pytest.mark.parametrize("rho", [0.05, 0.5, 1.0, 3.0, 12.0])
def test_components_against_theta_quadrature(rho):
    q = np.array(dispersion_components_quadrature(rho))
    c = np.array(dispersion_components(rho))
    assert np.allclose(q, c, rtol=1e-8, atol=0)


def test_V2_quadrature_value_at_one():
    # the theta integral 8 rho int sin K1(2 rho sin) is V2 = 4 pi rho I0 K1 - 2 pi
    _, V2q, _ = dispersion_components_quadrature(1.0)
    ref = 4 * np.pi * bessel_i(0, 1.0) * bessel_k(1, 1.0) - 2 * np.pi
    assert V2q == pytest.approx(ref, rel=1e-10)


def test_V2_small_rho_limit():
    _, V2q, _ = dispersion_components_quadrature(1e-5)
    V2 = dispersion_components(1e-5)[1]
    assert abs(V2q - 2 * np.pi) < 1e-3 and abs(V2 - 2 * np.pi) < 1e-3


def test_V2_derivative_relation():
    rho, h = 0.8, 1e-6
    d = (dispersion_components(rho + h)[1] - dispersion_components(rho - h)[1]) / (2 * h)
    assert abs(d + 2.0 / rho * dispersion_components(rho)[2]) < 1e-5


@pytest.mark.parametrize("rho", [1.0, 0.25, 3.7, 0.01])
def test_quadrature_oracle_pointwise(rho):
    assert abs(dispersion_V_quadrature(rho) - dispersion_V(rho)) < 1e-6 * (1 + abs(dispersion_V(rho)))


def test_quadrature_oracle_at_root(lambda_star):
    assert abs(dispersion_V_quadrature(lambda_star)) < 1e-6
    assert dispersion_V_quadrature(0.25) < 0


def test_quadrature_oracle_grid():
    rho = np.geomspace(1e-3, 50, 500)
    V = dispersion_V(rho)
    Vq = dispersion_V_quadrature(rho)
    assert np.max(np.abs(V - Vq) / (1 + np.abs(V))) <= 1e-6


def test_lambda_star_frozen_and_bracketed():
    cr = find_lambda_star()
    lo, hi = BRACKET
    assert lo < cr.lambda_star < hi
    assert cr.lambda_star == pytest.approx(LAMBDA_STAR, abs=1e-15)
    assert cr.residual <= 1e-12 and cr.V_prime_at_root > 0
    assert abs(cr.bisection - cr.secant) <= 1e-12
    assert zero_condition(0.5) < 0 < zero_condition(BRACKET[1])


def test_lambda_star_tolerance_argument():
    assert find_lambda_star(1e-14).lambda_star == find_lambda_star().lambda_star
    with pytest.raises(ValueError):
        find_lambda_star(0.0)


def test_single_sign_change():
    rho = np.arange(1e-3, 5.0, 1e-3)
    s = np.sign(dispersion_V(rho))
    idx = np.nonzero(np.diff(s))[0]
    assert idx.size == 1
    assert BRACKET[0] < rho[idx[0] + 1] < BRACKET[1]


def test_negative_below_half():
    rho = np.linspace(1e-3, 0.5, 300, endpoint=False)
    assert np.all(dispersion_V(rho) < 0)


def test_bracket_quartic_positive():
    rho = np.arange(BRACKET[0], BRACKET[1], 1e-4)[1:]
    assert np.all(2 * rho + 12 * rho**2 - rho**3 - 4 * rho**4 - 2 > 0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_eigenvalue_vanishes_at_bifurcation_radius(k, lambda_star):
    assert abs(eigenvalue(lambda_star / k, k)) < 1e-12


def test_eigenvalue_properties(lambda_star):
    assert eigenvalue(0.8, 3) == eigenvalue(0.4, 6)
    assert eigenvalue(lambda_star, 2) > 0
    with pytest.raises(ValueError):
        eigenvalue(1.0, 0)


def test_dispersion_point_invariant():
    p = dispersion_point(1.3)
    assert isinstance(p, DispersionPoint)
    assert abs(p.V1 + p.V2 - p.V3 - 2 * np.pi - p.V) < 1e-10


def test_critical_radius_validation():
    with pytest.raises(ValueError):
        CriticalRadius(lambda_star=0.7, residual=0.0, V_prime_at_root=1.0)
    with pytest.raises(ValueError):
        CriticalRadius(lambda_star=0.6, residual=0.0, V_prime_at_root=-1.0)


@given(st.floats(min_value=0.5005, max_value=0.64))
def test_sign_matches_zero_condition(rho):
    assert np.sign(dispersion_V(rho)) == np.sign(zero_condition(rho))


@given(st.floats(min_value=1e-3, max_value=40.0), st.integers(1, 6))
def test_eigenvalue_product_dependence(lam, k):
    assert eigenvalue(lam, k) == dispersion_V(lam * k)
