"""Acceptance suite: one test per criterion, summarized as PASS/FAIL lines."""
import numpy as np
import pytest

from exdomains.dispersion import (
    BRACKET,
    dispersion_components,
    dispersion_V,
    dispersion_V_prime,
    dispersion_V_quadrature,
    find_lambda_star,
)
from exdomains.kernels import kernel_mass
from exdomains.linearized import eigen_check_fd
from exdomains.operator_eval import h_direct, h_regularized
from exdomains.profile import PeriodicProfile
from exdomains.solver import (
    BranchPoint,
    SolverConfig,
    jacobian_at_constant,
    limit_at_zero,
    refine_point,
    trace_branch,
    verify_branch_point,
)
from exdomains.special_functions import bessel_i, bessel_k

TWO_PI = 2 * np.pi
S_POINTS = np.array([0.0, 0.7, np.pi / 2, 2.4, np.pi])


def test_criterion_1_constant_cylinder(criterion):
    with criterion(1, "constant-cylinder exactness") as d:
        reg = dirc = 0.0
        for lam in (0.3, 0.5, 1.0, 2.0, 5.0):
            p = PeriodicProfile.constant(lam)
            reg = max(reg, float(np.max(np.abs(h_regularized(p, S_POINTS) + TWO_PI))))
            dirc = max(dirc, float(np.max(np.abs(h_direct(p, S_POINTS[:2]) + TWO_PI))))
        d["regularized"], d["direct"] = reg, dirc
        assert reg <= 1e-8
        assert dirc <= 1e-7


def test_criterion_2_kernel_masses(criterion):
    with criterion(2, "kernel masses") as d:
        e0 = abs(kernel_mass("G0") - 4 * np.pi)
        e1 = abs(kernel_mass("G1") - 8 * np.pi / 3)
        d["G0"], d["G1"] = e0, e1
        assert e0 <= 1e-8
        assert e1 <= 1e-8


def test_criterion_3_dispersion_triangle(criterion):
    with criterion(3, "dispersion oracle triangle") as d:
        rho = np.geomspace(1e-3, 50.0, 500)
        V = dispersion_V(rho)
        Vq = dispersion_V_quadrature(rho)
        oracle = float(np.max(np.abs(V - Vq) / (1 + np.abs(V))))
        V1, V2, V3 = dispersion_components(rho)
        split = float(np.max(np.abs(V - (V1 + V2 - V3 - TWO_PI))))
        d["oracle_rel"], d["components"] = oracle, split
        assert oracle <= 1e-6
        assert split <= 1e-10


def test_criterion_4_critical_radius(criterion):
    with criterion(4, "critical radius") as d:
        find_lambda_star.cache_clear()
        cr = find_lambda_star()
        d["lambda_star"] = cr.lambda_star
        d["residual"] = cr.residual
        d["root_gap"] = abs(cr.bisection - cr.secant)
        assert BRACKET[0] == 0.5 and BRACKET[1] == pytest.approx(0.64039, abs=1e-5)
        assert BRACKET[0] < cr.lambda_star < BRACKET[1]
        assert abs(dispersion_V(cr.lambda_star)) <= 1e-12
        assert dispersion_V_prime(cr.lambda_star) > 0
        assert abs(cr.bisection - cr.secant) <= 1e-12


def test_criterion_5_spectral_triangle(criterion, lambda_star):
    with criterion(5, "spectral triangle") as d:
        worst = 0.0
        for lam in (0.3, 0.7, lambda_star, 1.3):
            for k in range(1, 6):
                ref = -dispersion_V(lam * k) / lam
                err = abs(eigen_check_fd(lam, k) - ref)
                worst = max(worst, err / max(1e-4, 1e-3 * abs(ref)))
        d["worst_error_over_tolerance"] = worst
        assert worst <= 1.0


def test_criterion_6_bessel_properties(criterion):
    with criterion(6, "Bessel identity suite") as d:
        x = np.geomspace(1e-4, 50.0, 200)
        i0, i1 = bessel_i(0, x), bessel_i(1, x)
        k0, k1 = bessel_k(0, x), bessel_k(1, x)
        wr = float(np.max(np.abs(x * (i0 * k1 + i1 * k0) - 1)))
        d["wronskian"] = wr
        assert wr <= 1e-11
        # step 1e-6, shrunk below x = 1e-3 where K0''' ~ 2/x^3 would swamp the difference
        h = 1e-6 * np.maximum(x, 1.0) * np.minimum(1.0, x / 1e-3)
        dk0 = (bessel_k(0, x + h) - bessel_k(0, x - h)) / (2 * h)
        dxk1 = ((x + h) * bessel_k(1, x + h) - (x - h) * bessel_k(1, x - h)) / (2 * h)
        di1 = (bessel_i(1, x + h) - bessel_i(1, x - h)) / (2 * h)
        assert np.all(np.abs(dk0 + k1) <= 1e-5 * np.maximum(1, k1))
        assert np.all(np.abs(dxk1 + x * k0) <= 1e-5 * np.maximum(1, x * k0))
        assert np.all(np.abs(x * di1 - (x * i0 - i1)) <= 1e-5 * np.maximum(1, x * i0))
        assert np.all(k1 > k0)
        assert np.all(x * k0 < x * k1) and np.all(x * k1 <= 1)
        r = i1 / i0
        assert np.all(x / (2 + x) < r) and np.all(r < 2 * x / (1 + 2 * x)) and np.all(r < x / 2)
        q = k1 / k0
        assert np.all((3 + 4 * x) / (1 + 4 * x) < q) and np.all(q < (1 + 2 * x) / (2 * x))
        assert np.all(0 <= x * k1 * i1) and np.all(x * k1 * i1 < 0.5)
        assert np.all(0.5 < x * k1 * i0) and np.all(x * k1 * i0 <= 1)
        for v in (50 * bessel_i(1, 50.0) * bessel_k(1, 50.0), 50 * bessel_i(1, 50.0) * bessel_k(0, 50.0)):
            assert 0.49 <= v <= 0.51


@pytest.fixture(scope="module")
def branches(lambda_star):
    out = {}
    for k, s_max in ((1, 0.05), (2, 0.03)):
        cfg = SolverConfig(N=32, s_max=s_max)
        out[k] = (cfg, trace_branch(k, cfg, lambda_star))
    return out


@pytest.mark.slow
@pytest.mark.parametrize("k", [1, 2])
def test_criterion_7_branch_reproduction(criterion, branches, lambda_star, k):
    with criterion(7, "branch reproduction") as d:
        cfg, res = branches[k]
        assert res.complete, res.stop_reason
        s = res.amplitudes()
        assert np.isclose(s.min(), -cfg.s_max) and np.isclose(s.max(), cfg.s_max)
        if k == 1:
            assert np.sum(s > 0) >= 10 and np.sum(s < 0) >= 10
        sup = max(p.residual_grid_sup for p in res.points)
        d[f"k{k}_max_sup"] = sup
        assert all(p.verified for p in res.points)
        assert sup < 1e-7
        lim = limit_at_zero(res)
        d[f"k{k}_lambda0_gap"] = abs(lim - lambda_star / k)
        assert abs(lim - lambda_star / k) < 1e-6
        origin = [p for p in res.points if p.s == 0][0]
        assert np.all(origin.mu.coefficients == 0)
        assert all(p.mu.coefficients[k] == 0 for p in res.points)
        pt = [p for p in res.points if np.isclose(p.s, 0.03)][0]
        fine = refine_point(pt, 2 * cfg.N, cfg)
        d[f"k{k}_doubling_N"] = abs(fine.lam - pt.lam)
        assert abs(fine.lam - pt.lam) < 1e-7


@pytest.mark.slow
def test_criterion_8_negative_controls(criterion, branches, lambda_star):
    with criterion(8, "negative controls") as d:
        tampered = BranchPoint(1, 0.03, lambda_star + 0.05, PeriodicProfile(np.zeros(33)))
        rep = verify_branch_point(tampered)
        d["tampered_sup"] = rep.sup_norm
        assert not rep.verified
        # a converged point with one coefficient nudged must fail too
        _, res = branches[1]
        pt = [p for p in res.points if np.isclose(p.s, 0.03)][0]
        assert verify_branch_point(pt).verified
        mu = pt.mu.coefficients.copy()
        mu[2] += 1e-5
        nudged = BranchPoint(1, pt.s, pt.lam, PeriodicProfile(mu))
        assert not verify_branch_point(nudged).verified
        N = 32
        J = jacobian_at_constant(lambda_star, N)
        diag = np.diag(J)
        ref = -dispersion_V(lambda_star * np.arange(2, N + 1)) / lambda_star
        rel = float(np.max(np.abs(diag[1:] / ref - 1)))
        d["kernel_entry"] = abs(diag[0])
        d["diag_rel"] = rel
        assert abs(diag[0]) < 1e-4
        assert rel < 1e-3
