"""Evaluation of the boundary operator H(phi) for periodic profiles.

For a positive even profile ``phi`` the surface ``{(phi(s) sigma, s)}`` has

    H(phi)(s) = -(1 + phi'(s)^2)^(-1/2) * Hc(phi)(s),

    Hc(phi)(s) = int_R int_{S^1} [ (phi(s) - phi(s-t) - t phi'(s)) W(s-t)
                                   + 1/2 phi(s-t) p^2 W(s-t) ] / D^(3/2) dsigma dt,

    D = t^2 + (phi(s) - phi(s-t))^2 + phi(s) phi(s-t) p^2,
    W(u) = phi(u) sqrt(1 + phi'(u)^2),   p = |sigma - e_1|.

Constant profiles give ``H = -2 pi`` exactly.

Two independent evaluators are provided.

``h_direct``
    The double integral above as written: an outer Gauss-Legendre rule in
    ``theta`` (``p = 2 sin(theta/2)``) on panels refined geometrically towards
    ``theta = 0`` and an inner axial rule that is sinh-graded on the peak
    width ``phi(s) p / sqrt(1 + phi'(s)^2)``. Whole periods beyond the near
    cell are integrated explicitly up to a cut-off, and the remaining lattice
    sum is closed with a midpoint Euler-Maclaurin correction.

``h_regularized``
    The fast evaluator. Offsets ``+-t`` are paired, which splits the first
    numerator into the even part ``L_e = 2 phi(s) - phi(s-t) - phi(s+t)`` and
    the odd part ``L_o = phi(s+t) - phi(s-t) - 2 t phi'(s)``. At fixed ``t``
    the circle integral is done in closed form through the kernels of
    :mod:`exdomains.kernels`,

        int_{S^1} (A + C p^2)^(-3/2)     = C^(-3/2) G(x),
        int_{S^1} p^2 (A + C p^2)^(-3/2) = C^(-3/2) G0(x),   x^2 = A / C,

    with ``G = 4 g / x^2``; g and G0 come from complete elliptic integrals.
    The remaining axial integral runs over the
    near cell ``[0, pi]`` on geometrically graded panels, over a few whole
    periods explicitly, and over all further periods through the large-x
    expansions of G and G0 summed with Hurwitz zeta functions.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from math import ceil, log, pi

import numpy as np
from scipy.special import binom, zeta

from .kernels import asymptotic_coefficients, kernel_g_G0_elliptic
from .profile import PeriodicProfile, ProfileError, x_minus_sin
from .quadrature import gauss_legendre, geometric_edges, panel_rule, sinh_rule

TWO_PI = 2.0 * pi


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature resolution for the operator evaluators.

    Attributes
    ----------
    theta_nodes : int
        Circle rule of the direct evaluator: ``theta_nodes // 4``
        Gauss-Legendre nodes on each geometrically graded theta panel.
    t_panels : int
        Geometric panels in the axial near cell (ratio 2 towards t = 0).
    t_nodes : int
        Gauss-Legendre nodes per axial panel.
    t_cap : float
        Axial range (in units of the period 2 pi) integrated cell by cell in
        the direct evaluator before the Euler-Maclaurin closure.
    target_rel_error : float
        Tolerance of the doubling self-check.
    """

    theta_nodes: int = 48
    t_panels: int = 44
    t_nodes: int = 10
    t_cap: float = 12.0
    target_rel_error: float = 1e-9

    def __post_init__(self):
        for name in ("theta_nodes", "t_panels", "t_nodes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not self.t_cap > 0:
            raise ValueError("t_cap must be positive")
        if not self.target_rel_error > 0:
            raise ValueError("target_rel_error must be positive")

    def doubled(self):
        return replace(
            self,
            theta_nodes=2 * self.theta_nodes,
            t_nodes=2 * self.t_nodes,
            t_cap=2 * self.t_cap,
        )


DEFAULT_QUAD = QuadratureSpec()


class QuadratureError(RuntimeError):
    """Refined evaluation disagrees with the base evaluation."""


def _bandwidth(profile):
    return max(profile.effective_bandwidth(1e-15), 1)


def _trim(profile):
    nb = profile.effective_bandwidth(1e-15)
    return profile.coefficients[: nb + 1]


def _check(profile):
    if not isinstance(profile, PeriodicProfile):
        raise TypeError("profile must be a PeriodicProfile")
    profile.check_positive()


def _as_s(s):
    arr = np.asarray(s, dtype=float)
    return np.atleast_1d(arr).ravel(), arr.ndim == 0, np.shape(s)


# --------------------------------------------------------------------------
# regularized evaluator
# --------------------------------------------------------------------------

def _near_rule(quad, nb, phi_min):
    """Axial rule on (0, pi]: geometric panels at 0, uniform panels after."""
    top = min(0.5, 0.5 * phi_min, 1.0 / nb)
    near = geometric_edges(0.0, top, ratio=2.0, smallest=2.0 ** -quad.t_panels)
    width = min(0.25, 0.75 / nb)
    n_uni = max(1, int(ceil((pi - top) / width)))
    edges = np.concatenate([near[:-1], np.linspace(top, pi, n_uni + 1)])
    return panel_rule(edges, quad.t_nodes)


def _period_rule(n_nodes, width):
    """Composite Gauss-Legendre rule on one period [-pi, pi]."""
    n_pan = max(2, int(ceil(TWO_PI / width)))
    return panel_rule(np.linspace(-pi, pi, n_pan + 1), n_nodes)


def _far_terms(c_cos, c_sin, phi0, dphi0, tau, w_tau, a, l, quad, j_explicit, n_order):
    """Contribution of all axial periods |j| >= 1 for each s (rows)."""
    # phi(s - tau) = sum a_l [cos ls cos l tau + sin ls sin l tau]
    lt = np.multiply.outer(tau, l)
    ct, st = np.cos(lt), np.sin(lt)
    phiu = (c_cos * a) @ ct.T + (c_sin * a) @ st.T
    dphiu = -((c_sin * a * l) @ ct.T - (c_cos * a * l) @ st.T)
    Wu = phiu * np.sqrt(1.0 + dphiu**2)
    diff = phi0[:, None] - phiu
    B = diff**2
    C = phi0[:, None] * phiu
    total = np.zeros(phi0.shape)

    # explicit periods
    for j in range(1, j_explicit + 1):
        for sign in (1.0, -1.0):
            t = tau[None, :] + sign * TWO_PI * j
            x2 = (t * t + B) / C
            x = np.sqrt(x2)
            g, G0 = kernel_g_G0_elliptic(x)
            cg = C**-1.5
            f = (diff - t * dphi0[:, None]) * Wu * cg * 4.0 * g / x2 + 0.5 * phiu * Wu * cg * G0
            total += f @ w_tau

    # remaining periods from the large-x expansions
    _, cG = asymptotic_coefficients("G", n_order + 1)
    _, cG0 = asymptotic_coefficients("G0", n_order + 1)
    shift = j_explicit + 1
    q_plus = shift + tau / TWO_PI
    q_minus = shift - tau / TWO_PI
    Cp = [np.ones_like(C)]
    Bp = [np.ones_like(B)]
    for _ in range(n_order):
        Cp.append(Cp[-1] * C)
        Bp.append(Bp[-1] * B)
    for q in range(n_order + 1):
        AG = np.zeros_like(B)
        AG0 = np.zeros_like(B)
        for m in range(q + 1):
            k = q - m
            fac = binom(-(3.0 + 2 * m) / 2.0, k) * (Cp[m] * Bp[k])
            AG += cG[m] * fac
            AG0 += cG0[m] * fac
        alpha = diff * Wu * AG + 0.5 * phiu * Wu * AG0
        beta = -dphi0[:, None] * Wu * AG
        n_a = 3 + 2 * q
        n_b = 2 + 2 * q
        # the expansion is in |y|; the beta term carries sign(y)
        S_a = TWO_PI**-n_a * (zeta(n_a, q_plus) + zeta(n_a, q_minus))
        S_b = TWO_PI**-n_b * (zeta(n_b, q_plus) - zeta(n_b, q_minus))
        total += (alpha * S_a[None, :] + beta * S_b[None, :]) @ w_tau
    return total


def hc_regularized(profile, s, quad=DEFAULT_QUAD):
    """``Hc(phi)(s)`` by the paired (even/odd) axial form; vectorized in s."""
    _check(profile)
    s_arr, scalar, shape = _as_s(s)
    a = _trim(profile)
    l = np.arange(a.size)
    nb = max(a.size - 1, 1)
    p = PeriodicProfile(a)
    phi_min = p.min_value()
    phi_max = float(np.max(p.eval(np.linspace(0, pi, 16 * nb + 64))))

    ls = np.multiply.outer(s_arr, l)
    c_cos, c_sin = np.cos(ls), np.sin(ls)
    phi0 = c_cos @ a
    dphi0 = -(c_sin @ (l * a))

    # near cell, offsets +-t with t in (0, pi]
    t, w = _near_rule(quad, nb, phi_min)
    lt = np.multiply.outer(t, l)
    sin_lt, cos_lt = np.sin(lt), np.cos(lt)
    half2 = np.sin(0.5 * lt) ** 2
    ac = c_cos * a
    asn = c_sin * a
    D_e = ac @ (2.0 * half2).T
    D_o = asn @ sin_lt.T
    L_e = 2.0 * D_e
    L_o = 2.0 * asn @ x_minus_sin(lt).T
    al = a * l
    near = np.zeros(s_arr.shape)
    t2 = t * t
    for sgn in (1.0, -1.0):  # sgn = +1: phi(s - t), -1: phi(s + t)
        dif = D_e - sgn * D_o  # phi(s) - phi(s -+ t)
        phiu = phi0[:, None] - dif
        dphiu = -((c_sin * al) @ cos_lt.T - sgn * (c_cos * al) @ sin_lt.T)
        Wu = phiu * np.sqrt(1.0 + dphiu**2)
        C = phi0[:, None] * phiu
        A = t2[None, :] + dif**2
        x = np.sqrt(A / C)
        g, G0 = kernel_g_G0_elliptic(x)
        Q = 4.0 * Wu * g / (np.sqrt(C) * A)
        P = phiu * Wu * C**-1.5 * G0
        near += (0.5 * (L_e + sgn * L_o) * Q + 0.5 * P) @ w

    # whole periods
    R = max(phi_max, 1e-300)
    y_min_needed = 8.0 * R
    j_explicit = max(1, int(ceil((y_min_needed + pi) / TWO_PI)) - 1)
    y_min = TWO_PI * (j_explicit + 1) - pi
    ratio = max(4.0 * R * R, R * R) / y_min**2
    n_order = int(min(40, max(4, ceil(-37.0 / log(ratio)))))
    # panels rather than one global rule: sqrt(1 + phi'^2) may have complex
    # singularities close to the real axis
    tau, w_tau = _period_rule(quad.t_nodes, min(0.5, 1.5 / nb))
    far = _far_terms(c_cos, c_sin, phi0, dphi0, tau, w_tau, a, l, quad, j_explicit, n_order)

    out = near + far
    return float(out[0]) if scalar else out.reshape(shape)


def h_regularized(profile, s, quad=DEFAULT_QUAD):
    """Fast evaluation of H(phi)(s) (scalar or array ``s``)."""
    s_arr, scalar, shape = _as_s(s)
    hc = np.atleast_1d(hc_regularized(profile, s_arr, quad))
    dphi = profile.eval_deriv(s_arr)
    out = -hc / np.sqrt(1.0 + dphi**2)
    return float(out[0]) if scalar else out.reshape(shape)


# --------------------------------------------------------------------------
# direct evaluator
# --------------------------------------------------------------------------

def _direct_theta_rule(quad):
    edges = geometric_edges(0.0, pi, ratio=2.0, smallest=2.0 ** -42)
    return panel_rule(edges, max(quad.theta_nodes // 4, 4))


def hc_direct(profile, s, quad=DEFAULT_QUAD):
    """``Hc(phi)(s)`` from the unpaired double integral (slow oracle)."""
    _check(profile)
    s = float(s)
    nb = _bandwidth(profile)
    phi0 = float(profile.eval(s))
    dphi0 = float(profile.eval_deriv(s))
    th, wth = _direct_theta_rule(quad)
    p = 2.0 * np.sin(0.5 * th)
    p2 = p * p

    def integrand(t, pp2):
        # t: axial offsets, pp2: p^2 broadcastable to t
        lam0 = profile.lambda0(s, t)
        lam1 = profile.lambda1(s, t)
        u = s - t
        phiu = profile.eval(u)
        Wu = phiu * np.sqrt(1.0 + profile.eval_deriv(u) ** 2)
        D = t * t + (t * lam0) ** 2 + phi0 * phiu * pp2
        return (t * lam1 * Wu + 0.5 * phiu * pp2 * Wu) / D**1.5

    # near cell [-pi, pi]: sinh-graded core plus uniform panels
    width = phi0 * p / np.sqrt(1.0 + dphi0**2)
    core = min(1.0, 1.0 / nb)
    n_core = 2 * quad.t_nodes + 16
    tc, wc = sinh_rule(width, core, n_core)
    n_uni = int(ceil((pi - core) / min(0.25, 0.5 / nb)))
    tu, wu = panel_rule(np.linspace(core, pi, n_uni + 1), quad.t_nodes)
    hc_theta = np.zeros_like(th)
    for sgn in (1.0, -1.0):
        hc_theta += np.sum(wc * integrand(sgn * tc, p2[:, None]), axis=1)
        hc_theta += integrand(sgn * tu[None, :], p2[:, None]) @ wu

    # whole periods: explicit cells then Euler-Maclaurin closure
    J = max(2, int(ceil(quad.t_cap * 2)))
    tau, w_tau = _period_rule(quad.t_nodes + 2, min(0.25, 0.5 / nb))
    u = s - tau
    phiu = profile.eval(u)
    Wu = phiu * np.sqrt(1.0 + profile.eval_deriv(u) ** 2)
    diff = phi0 - phiu
    U = diff * Wu + 0.5 * phiu * p2[:, None] * Wu  # rows: theta, cols: tau
    V = -dphi0 * Wu[None, :]
    Bm = diff[None, :] ** 2 + phi0 * phiu[None, :] * p2[:, None]
    far = np.zeros_like(th)
    for j in range(1, J + 1):
        for sgn in (1.0, -1.0):
            y = tau + sgn * TWO_PI * j
            far += ((U + V * y) / (y * y + Bm) ** 1.5) @ w_tau
    h = TWO_PI
    for sgn in (1.0, -1.0):
        # sum over j > J of (U + V y)(y^2 + B)^(-3/2), y = sgn*(2 pi j) + tau
        a_edge = h * (J + 0.5) + sgn * tau
        Vs = sgn * V
        r = np.sqrt(a_edge**2 + Bm)
        int_A = 1.0 / (r * (r + a_edge))
        int_C = 1.0 / r
        dA = -3.0 * a_edge / r**5
        dC = (Bm - 2.0 * a_edge**2) / r**5
        tail = (U * int_A + Vs * int_C) / h + (h / 24.0) * (U * dA + Vs * dC)
        far += tail @ w_tau

    return float(2.0 * np.sum(wth * (hc_theta + far)))


def h_direct(profile, s, quad=DEFAULT_QUAD):
    """H(phi)(s) from the unpaired double integral; scalar or array ``s``."""
    s_arr, scalar, shape = _as_s(s)
    out = np.array([
        -hc_direct(profile, si, quad) / np.sqrt(1.0 + float(profile.eval_deriv(si)) ** 2)
        for si in s_arr
    ])
    return float(out[0]) if scalar else out.reshape(shape)


# --------------------------------------------------------------------------
# residual and checks
# --------------------------------------------------------------------------

def residual_grid(grid_size):
    """Uniform grid of ``grid_size`` points on [0, pi] (endpoints included)."""
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    return np.linspace(0.0, pi, grid_size)


def equilibrium_residual(profile, grid_size, quad=DEFAULT_QUAD):
    """``H(phi)(s_j) + 2 pi`` on a uniform grid of [0, pi]."""
    s = residual_grid(grid_size)
    return h_regularized(profile, s, quad) + TWO_PI


def self_check(profile, s, quad=DEFAULT_QUAD, method="regularized"):
    """Evaluate with ``quad`` and with doubled resolution.

    Returns the base value and the absolute change; raises
    ``QuadratureError`` if the change exceeds ``target_rel_error * (1 + |H|)``.
    """
    f = h_regularized if method == "regularized" else h_direct
    base = np.asarray(f(profile, s, quad))
    fine = np.asarray(f(profile, s, quad.doubled()))
    change = float(np.max(np.abs(fine - base)))
    if change > quad.target_rel_error * (1.0 + float(np.max(np.abs(base)))):
        raise QuadratureError(f"doubling changed H by {change:.3e}")
    return base, change


__all__ = [
    "QuadratureSpec",
    "DEFAULT_QUAD",
    "QuadratureError",
    "ProfileError",
    "h_direct",
    "h_regularized",
    "hc_direct",
    "hc_regularized",
    "equilibrium_residual",
    "residual_grid",
    "self_check",
]
