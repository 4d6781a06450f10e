"""Dispersion relation of the linearized operator at constant profiles.

At a constant profile of radius ``lambda`` the linearized mean curvature
operator acts diagonally on ``cos(k t)`` with eigenvalue ``V(lambda k)``,

    V(rho) = 4 pi rho I_1(rho) (rho K_1(rho) - K_0(rho)),

which also equals the kernel integral

    V(rho) = int_R (1 - cos(rho t)) G(t) dt + int_R cos(rho t) F(t) dt - 2 pi.

``V`` is negative on (0, lambda*) and positive beyond, where lambda* is the
unique root of ``rho K_1(rho) = K_0(rho)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import pi, sqrt

import numpy as np
from scipy.special import sici

from .kernels import (
    DEFAULT_KERNEL_CONFIG,
    KernelEvalConfig,
    asymptotic_coefficients,
    kernel_F,
    kernel_g,
    kernel_tail_integral,
)
from .quadrature import geometric_edges, panel_rule
from .special_functions import (
    _i_scaled,
    _k01_scaled,
    bessel_ik_products,
    bessel_k,
)

TWO_PI = 2.0 * pi
BRACKET = (0.5, (1.0 + sqrt(17.0)) / 8.0)


class QuadratureError(RuntimeError):
    """Successive quadrature refinements disagree beyond tolerance."""


class BracketError(RuntimeError):
    """The root bracket for the critical radius has no sign change."""


@dataclass(frozen=True)
class DispersionPoint:
    rho: float
    V: float
    V_prime: float
    V1: float
    V2: float
    V3: float


@dataclass(frozen=True)
class CriticalRadius:
    """Root ``lambda*`` of V with its diagnostics.

    ``bisection`` and ``secant`` are the estimates of the two independent
    root finders; ``lambda_star`` is the bisection value.
    """

    lambda_star: float
    residual: float
    V_prime_at_root: float
    bisection: float = field(default=float("nan"))
    secant: float = field(default=float("nan"))

    def __post_init__(self):
        lo, hi = BRACKET
        if not lo < self.lambda_star < hi:
            raise ValueError(f"lambda_star={self.lambda_star} outside ({lo}, {hi})")
        if not self.V_prime_at_root > 0:
            raise ValueError("V'(lambda*) must be positive")


def _check_rho(rho):
    arr = np.asarray(rho, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("rho must be positive")
    return np.atleast_1d(arr), arr.ndim == 0


def _ret(v, shape, scalar):
    return float(v[0]) if scalar else v.reshape(shape)


# --------------------------------------------------------------------------
# closed forms
# --------------------------------------------------------------------------

def dispersion_V(rho):
    """``V(rho) = 4 pi rho I_1(rho) (rho K_1(rho) - K_0(rho))`` for rho > 0."""
    r, scalar = _check_rho(rho)
    i1 = _i_scaled(1, r)
    k0, k1 = _k01_scaled(r)
    v = 4.0 * pi * r * i1 * (r * k1 - k0)
    return _ret(v, np.shape(rho), scalar)


def dispersion_V_prime(rho):
    """``V'(rho) = 4 pi rho^2 (I0 K1 - I1 K0) - 4 pi rho (I0 K0 - I1 K1)``."""
    r, scalar = _check_rho(rho)
    i0k0, i0k1, i1k0, i1k1 = bessel_ik_products(r)
    v = 4.0 * pi * r * r * (i0k1 - i1k0) - 4.0 * pi * r * (i0k0 - i1k1)
    return _ret(v, np.shape(rho), scalar)


def dispersion_components(rho):
    """Return ``(V1, V2, V3)`` with ``V = V1 + V2 - V3 - 2 pi``.

    ``V1 = 2 pi rho^2 (I0 K0 + I1 K1)``, ``V2 = 4 pi rho I0 K1 - 2 pi`` and
    ``V3 = 2 pi rho^2 (I0 K0 - I1 K1)``.
    """
    r, scalar = _check_rho(rho)
    i0k0, i0k1, _, i1k1 = bessel_ik_products(r)
    v1 = TWO_PI * r * r * (i0k0 + i1k1)
    v2 = 4.0 * pi * r * i0k1 - TWO_PI
    v3 = TWO_PI * r * r * (i0k0 - i1k1)
    shape = np.shape(rho)
    return tuple(_ret(v, shape, scalar) for v in (v1, v2, v3))


def dispersion_point(rho):
    rho = float(rho)
    v1, v2, v3 = dispersion_components(rho)
    return DispersionPoint(rho, dispersion_V(rho), dispersion_V_prime(rho), v1, v2, v3)


def dispersion_components_quadrature(rho, n=16):
    """Theta-integral definitions of (V1, V2, V3).

    ``V1 = 8 rho^2 int cos^2 K0(2 rho sin)``, ``V2 = 8 rho int sin K1(2 rho sin)``
    and ``V3 = 8 rho^2 int sin^2 K0(2 rho sin)``, all over [0, pi/2]. Panels are
    refined geometrically towards theta = 0 where K0 is log-singular.
    """
    rho = float(rho)
    if not rho > 0:
        raise ValueError("rho must be positive")
    th, w = panel_rule(geometric_edges(0.0, 0.5 * pi, smallest=1e-15), n)
    x = 2.0 * rho * np.sin(th)
    k0 = bessel_k(0, x)
    k1 = bessel_k(1, x)
    c2 = np.cos(th) ** 2
    v1 = 8.0 * rho**2 * np.sum(w * c2 * k0)
    v2 = 8.0 * rho * np.sum(w * np.sin(th) * k1)
    v3 = 8.0 * rho**2 * np.sum(w * (1.0 - c2) * k0)
    return v1, v2, v3


def eigenvalue(lam, k):
    """Eigenvalue ``V(lam k)`` of the linearized operator on ``cos(k t)``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    return dispersion_V(lam * k)


# --------------------------------------------------------------------------
# quadrature oracle
# --------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _t_table(cfg: KernelEvalConfig, nodes: int, h: float):
    """Nodes, weights and kernel samples on [0, T]."""
    T = cfg.tail_truncation
    h0 = min(h, T)
    near = geometric_edges(0.0, h0, smallest=1e-15)
    far = np.linspace(h0, T, max(1, int(np.ceil((T - h0) / h))) + 1)
    edges = np.concatenate([near[:-1], far])
    t, w = panel_rule(edges, nodes)
    g = kernel_g(t, cfg)
    F = kernel_F(t, cfg)
    for arr in (t, w, g, F):
        arr.flags.writeable = False
    return t, w, g, F


def _cos_power_tail(a, n_max):
    """``C_n = int_a^inf cos(u) u^-n du`` for n = 1..n_max (index n-1)."""
    out = np.empty(n_max)
    if a < 40.0:
        si, ci = sici(a)
        C = -ci
        S = 0.5 * pi - si
        out[0] = C
        ca, sa = np.cos(a), np.sin(a)
        for n in range(1, n_max):
            C, S = (ca * a**-n - S) / n, (sa * a**-n + C) / n
            out[n] = C
        return out
    # integration by parts: I_n = i e^{ia} a^-n sum_k (n)_k (-i/a)^k
    e = np.exp(1j * a)
    for n in range(1, n_max + 1):
        term = 1.0 + 0j
        total = term
        for k in range(60):
            term = term * (n + k) * (-1j / a)
            total += term
            if abs(term) < 1e-18 * abs(total):
                break
        out[n - 1] = (1j * e * a**-n * total).real
    return out


def _tail(rho, T, n_terms=10):
    """``int_T^inf [(1 - cos rho t) G + cos(rho t) F] dt`` from the expansions."""
    lead, cg = asymptotic_coefficients("G", n_terms)
    _, cf = asymptotic_coefficients("F", n_terms)
    total = kernel_tail_integral("G", T, n_terms)
    a = rho * T
    powers = lead + 2 * np.arange(n_terms)
    C = _cos_power_tail(a, int(powers[-1]))
    # int_T^inf cos(rho t) t^-n dt = rho^(n-1) C_n(rho T)
    for c, n in zip(cf - cg, powers):
        total += c * rho ** (n - 1.0) * C[n - 1]
    return total


def _V_quad_once(r, cfg, nodes, h):
    t, w, g, F = _t_table(cfg, nodes, h)
    T = cfg.tail_truncation
    out = np.empty_like(r)
    for i, rho in enumerate(r):
        s = np.sin(0.5 * rho * t) / t
        body = np.sum(w * (8.0 * g * s * s + np.cos(rho * t) * F))
        out[i] = 2.0 * (body + _tail(rho, T)) - TWO_PI
    return out


def dispersion_V_quadrature(rho, cfg=DEFAULT_KERNEL_CONFIG, check=True):
    """V from its defining kernel integrals (independent of the Bessel forms).

    The first integrand is written as ``8 g(t) (sin(rho t / 2) / t)^2``, which
    is bounded at ``t = 0``. Quadrature runs over [0, T] on Gauss-Legendre
    panels of width 0.05 (geometrically refined at 0 for the logarithmic
    singularity of F); the part beyond ``T = cfg.tail_truncation`` is
    integrated term by term from the large-t expansions of G and F.

    Raises
    ------
    QuadratureError
        If ``check`` and two rules of different order disagree by more than
        ``cfg.target_rel_error * (1 + |V|)``.
    """
    r, scalar = _check_rho(rho)
    fine = _V_quad_once(r, cfg, 12, 0.05)
    if check:
        coarse = _V_quad_once(r, cfg, 10, 0.05)
        bad = np.abs(fine - coarse) > cfg.target_rel_error * (1.0 + np.abs(fine))
        if np.any(bad):
            raise QuadratureError(
                f"V quadrature not converged at rho={r[bad][:3]} "
                f"(diff {np.max(np.abs(fine - coarse)[bad]):.2e})"
            )
    return _ret(fine, np.shape(rho), scalar)


# --------------------------------------------------------------------------
# critical radius
# --------------------------------------------------------------------------

def zero_condition(rho):
    """``rho K_1(rho) - K_0(rho)``; shares its sign and zero with V."""
    return rho * bessel_k(1, rho) - bessel_k(0, rho)


def _bisect(f, a, b, fa, fb):
    while True:
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            return a if abs(fa) < abs(fb) else b
        fm = f(m)
        if fm == 0.0:
            return m
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b, fb = m, fm


def _secant(f, x0, x1, tol=1e-16, maxiter=100):
    f0, f1 = f(x0), f(x1)
    for _ in range(maxiter):
        if f1 == f0:
            return x1
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if abs(x2 - x1) <= tol * abs(x2):
            return x2
        x0, f0, x1, f1 = x1, f1, x2, f(x2)
    raise RuntimeError("secant iteration did not converge")


@lru_cache(maxsize=16)
def find_lambda_star(tol=1e-12):
    """Locate the critical radius ``lambda*`` where V changes sign.

    Bisection to full floating-point resolution on
    ``rho K_1(rho) - K_0(rho)`` inside ``(1/2, (1 + sqrt 17)/8)``, checked
    against an independent secant iteration started from the bracket ends.

    Raises
    ------
    BracketError
        If the zero condition does not change sign on the bracket.
    RuntimeError
        If the two root finders disagree by more than 1e-12, or
        ``|V(lambda*)| > tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    a, b = BRACKET
    fa, fb = zero_condition(a), zero_condition(b)
    if not (fa < 0 < fb):
        raise BracketError(f"no sign change on bracket: f({a})={fa}, f({b})={fb}")
    root_b = _bisect(zero_condition, a, b, fa, fb)
    root_s = _secant(zero_condition, a, b)
    if abs(root_b - root_s) > 1e-12:
        raise RuntimeError(f"bisection {root_b} and secant {root_s} disagree")
    res = abs(dispersion_V(root_b))
    if res > tol:
        raise RuntimeError(f"|V(lambda*)| = {res:.3e} exceeds tol={tol:.1e}")
    return CriticalRadius(
        lambda_star=root_b,
        residual=res,
        V_prime_at_root=dispersion_V_prime(root_b),
        bisection=root_b,
        secant=root_s,
    )
