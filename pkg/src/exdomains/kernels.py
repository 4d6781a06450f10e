"""Axial convolution kernels obtained by integrating over the unit circle.

With ``p = 2 sin(theta/2)`` the chord length between two points of the unit
circle,

    G(t)  = int_{S^1} (t^2 + p^2)^(-3/2)
    G0(t) = int_{S^1} p^2 (t^2 + p^2)^(-3/2)
    G1(t) = int_{S^1} p^4 (t^2 + p^2)^(-5/2)
    F     = G0 - 3/4 G1

and ``G(t) = 4 g(t) / t^2`` with the bounded, C^1 function

    g(t) = (4 + t^2)^(-1/2) int_0^{pi/2} sqrt(1 - r^2 sin^2 phi) dphi,
    r = 2 / sqrt(4 + t^2).

All circle integrals are reduced to ``4 int_0^{pi/2} f(2 sin theta) dtheta``
and evaluated with a Gauss-Legendre rule after the substitution
``theta = c sinh(v)``, ``c = min(|t|/2, 1)``, which resolves the
near-singular layer of width ``|t|/2`` at ``theta = 0``.

G0 and G1 diverge logarithmically at ``t = 0`` (integrable); they return
``inf`` there.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, pi

import numpy as np
from scipy.special import binom, ellipe, ellipkm1

from .quadrature import gauss_legendre, geometric_edges, panel_rule, sinh_rule

HALF_PI = 0.5 * pi
G_PATH_SWITCH = 20.0


@dataclass(frozen=True)
class KernelEvalConfig:
    """Quadrature settings for kernel evaluation and half-line integrals.

    Attributes
    ----------
    theta_nodes : int
        Gauss-Legendre nodes for the circle integral on [0, pi/2].
    tail_truncation : float
        Cut-off T of the half-line t-integrals; the remainder beyond T is
        added from the large-t expansions.
    target_rel_error : float
        Accuracy goal used to size panels and series.
    """

    theta_nodes: int = 64
    tail_truncation: float = 40.0
    target_rel_error: float = 1e-10

    def __post_init__(self):
        if self.theta_nodes < 8:
            raise ValueError("theta_nodes must be >= 8")
        if not self.tail_truncation > 0:
            raise ValueError("tail_truncation must be positive")
        if not self.target_rel_error > 0:
            raise ValueError("target_rel_error must be positive")


DEFAULT_KERNEL_CONFIG = KernelEvalConfig()

# below this |t| the small-t limits are exact to double precision (error O(t^2 log t))
TINY_T = 1e-30


def _theta_rule(t, n):
    """Per-t rules on [0, pi/2], graded at theta = 0 on the scale |t|/2."""
    c = np.minimum(0.5 * np.abs(t), 1.0)
    return sinh_rule(c, HALF_PI, n)


def _prep(t):
    arr = np.asarray(t, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


def _out(v, shape, scalar):
    return float(v[0]) if scalar else v.reshape(shape)


def kernel_g(t, cfg=DEFAULT_KERNEL_CONFIG):
    """Bounded factor of G, ``g(t) = t^2 G(t) / 4``.

    Evaluated from the cancellation-free form
    ``g(t) = 2/(4+t^2) int_0^{pi/2} sqrt(t^2/4 + sin^2 phi) dphi``.

    Parameters
    ----------
    t : float or array_like
        Nonnegative argument.

    Returns
    -------
    float or ndarray
        Values of g; ``g(0) = 1/2``.
    """
    arr, scalar = _prep(t)
    if np.any(~(arr >= 0)):
        raise ValueError("kernel_g requires t >= 0")
    out = np.empty_like(arr)
    # below TINY_T the correction to g(0) is O(t^2 log t), far below rounding
    tiny = arr < TINY_T
    out[tiny] = 0.5
    tt = arr[~tiny]
    if tt.size:
        th, w = _theta_rule(tt, cfg.theta_nodes)
        q = 0.25 * tt[:, None] ** 2
        out[~tiny] = 2.0 / (4.0 + tt * tt) * np.sum(w * np.sqrt(q + np.sin(th) ** 2), axis=1)
    return _out(out, np.shape(t), scalar)


def kernel_G_theta(t, cfg=DEFAULT_KERNEL_CONFIG):
    """G(t) from direct quadrature of ``4 int_0^{pi/2} (t^2 + 4 sin^2 theta)^(-3/2)``."""
    arr, scalar = _prep(t)
    if np.any(arr == 0):
        raise ValueError("G is singular at t = 0")
    th, w = _theta_rule(arr, cfg.theta_nodes)
    s2 = 4.0 * np.sin(th) ** 2
    val = 4.0 * np.sum(w * (arr[:, None] ** 2 + s2) ** -1.5, axis=1)
    return _out(val, np.shape(t), scalar)


def kernel_G(t, cfg=DEFAULT_KERNEL_CONFIG):
    """Circle-averaged kernel ``G(t) = 4 g(|t|) / t^2``; even, singular at 0.

    The g-path is used for ``|t| <= 20`` and the direct theta quadrature
    beyond.
    """
    arr, scalar = _prep(t)
    if np.any(arr == 0):
        raise ValueError("G is singular at t = 0; use symmetrized forms")
    a = np.abs(arr)
    out = np.empty_like(a)
    near = a <= G_PATH_SWITCH
    if np.any(near):
        out[near] = 4.0 * kernel_g(a[near], cfg) / a[near] ** 2
    if np.any(~near):
        out[~near] = kernel_G_theta(a[~near], cfg)
    return _out(out, np.shape(t), scalar)


_SMALL_T_CONST = {(2, 1.5): -2.0, (4, 2.5): -8.0 / 3.0}


def _moment_kernel(t, power, expo, cfg):
    """4 int_0^{pi/2} p^power (t^2+p^2)^(-expo) dtheta with p = 2 sin theta.

    For ``|t| < TINY_T`` the limit ``2 log(8/|t|) + const`` is used: with
    ``q = t^2 + p^2`` the circle integral of ``q^(-1/2)`` is
    ``2 log(8/t) + O(t^2 log t)``, that of ``t^2 q^(-3/2)`` is ``4 g(0) = 2``
    and that of ``t^4 q^(-5/2)`` tends to ``int_R (1+u^2)^(-5/2) du = 4/3``.
    """
    arr, scalar = _prep(t)
    a = np.abs(arr)
    out = np.full_like(a, np.inf)
    tiny = (a > 0) & (a < TINY_T)
    if np.any(tiny):
        out[tiny] = 2.0 * np.log(8.0 / a[tiny]) + _SMALL_T_CONST[(power, expo)]
    nz = a >= TINY_T
    if np.any(nz):
        th, w = _theta_rule(a[nz], cfg.theta_nodes)
        p2 = 4.0 * np.sin(th) ** 2
        q = a[nz, None] ** 2 + p2
        # p^(2m) q^(-expo) = (p^2/q)^m q^(m - expo)
        m = power // 2
        out[nz] = 4.0 * np.sum(w * (p2 / q) ** m * q ** (m - expo), axis=1)
    return _out(out, np.shape(t), scalar)


def kernel_G0(t, cfg=DEFAULT_KERNEL_CONFIG):
    """``G0(t) = int_{S^1} p^2 (t^2+p^2)^(-3/2)``; even, ``inf`` at t = 0."""
    return _moment_kernel(t, 2, 1.5, cfg)


def kernel_G1(t, cfg=DEFAULT_KERNEL_CONFIG):
    """``G1(t) = int_{S^1} p^4 (t^2+p^2)^(-5/2)``; even, ``inf`` at t = 0."""
    return _moment_kernel(t, 4, 2.5, cfg)


def kernel_g_G0(x, theta_nodes=64):
    """``(g(x), G0(x))`` for an array ``x > 0`` sharing one theta rule.

    Used by the operator evaluator, where the circle integral at fixed axial
    offset reduces to these two kernels.
    """
    th, w = _theta_rule(x, theta_nodes)
    sn2 = np.sin(th) ** 2
    x2 = x[..., None] ** 2
    g = 2.0 / (4.0 + x * x) * np.sum(w * np.sqrt(0.25 * x2 + sn2), axis=-1)
    p2 = 4.0 * sn2
    G0 = 4.0 * np.sum(w * p2 * (x2 + p2) ** -1.5, axis=-1)
    return g, G0


_KE_SERIES = None


def _k_minus_e_small(m):
    """``K(m) - E(m)`` for small m from ``(pi/2) sum c_n^2 m^n 2n/(2n-1)``."""
    global _KE_SERIES
    if _KE_SERIES is None:
        n = np.arange(1, 30)
        c = np.cumprod((2 * n - 1) / (2 * n))
        _KE_SERIES = 0.5 * pi * c * c * (2 * n) / (2 * n - 1)
    return m * np.polynomial.polynomial.polyval(m, _KE_SERIES)


def kernel_g_G0_elliptic(x):
    """``(g(x), G0(x))`` through complete elliptic integrals, x > 0.

    With ``m = 4/(x^2+4)``: ``g = E(m)/sqrt(x^2+4)`` and
    ``G0 = 4 (K(m) - E(m)) / sqrt(x^2+4)``. ``K`` is taken from
    ``ellipkm1(1 - m)`` so that the log singularity at ``x -> 0`` keeps full
    relative accuracy; ``K - E`` uses its power series for ``m < 0.1``.
    Agrees with the theta-quadrature path to about 1e-15 relative.
    """
    x = np.asarray(x, dtype=float)
    x2 = x * x
    q = x2 + 4.0
    m = 4.0 / q
    rq = np.sqrt(q)
    E = ellipe(m)
    kme = ellipkm1(x2 / q) - E
    small = m < 0.1
    if np.any(small):
        kme = np.where(small, _k_minus_e_small(np.where(small, m, 0.0)), kme)
    G0 = 4.0 * kme / rq
    tiny = x < TINY_T
    if np.any(tiny):
        with np.errstate(divide="ignore"):
            G0 = np.where(tiny, 2.0 * np.log(8.0 / x) - 2.0, G0)
    return E / rq, G0


def kernel_F(t, cfg=DEFAULT_KERNEL_CONFIG):
    """``F = G0 - 3/4 G1``.

    The two moments share one theta rule, so the identity holds to rounding.
    At ``t = 0`` the log singularities do not cancel and the value is ``inf``.
    """
    arr, scalar = _prep(t)
    a = np.abs(arr)
    out = np.full_like(a, np.inf)
    nz = a > 0
    if np.any(nz):
        out[nz] = kernel_G0(a[nz], cfg) - 0.75 * kernel_G1(a[nz], cfg)
    return _out(out, np.shape(t), scalar)


# --------------------------------------------------------------------------
# large-t expansions:  K(t) = sum_m coef[m] t^(-lead - 2m)   (|t| > 2)
# --------------------------------------------------------------------------

def asymptotic_coefficients(name, n_terms=12):
    """Coefficients and leading power of the large-|t| expansion of a kernel.

    Uses ``mean_{S^1} p^(2m) = binom(2m, m)`` and the binomial series of
    ``(1 + p^2/t^2)^(-a)``; the series converges for ``|t| > 2``.

    Returns
    -------
    lead : int
        Leading power, so that ``K(t) = sum_m coef[m] |t|^(-lead - 2m)``.
    coef : ndarray
    """
    m = np.arange(n_terms)
    if name == "G":
        c = binom(-1.5, m) * np.array([comb(2 * j, j) for j in m])
        return 3, 2 * pi * c
    if name == "G0":
        c = binom(-1.5, m) * np.array([comb(2 * j + 2, j + 1) for j in m])
        return 3, 2 * pi * c
    if name == "G1":
        c = binom(-2.5, m) * np.array([comb(2 * j + 4, j + 2) for j in m])
        return 5, 2 * pi * c
    if name == "F":
        lead, c0 = asymptotic_coefficients("G0", n_terms)
        _, c1 = asymptotic_coefficients("G1", n_terms)
        c = c0.copy()
        c[1:] -= 0.75 * c1[:-1]
        return lead, c
    raise ValueError(f"unknown kernel {name!r}")


def kernel_asymptotic(name, t, n_terms=12):
    """Evaluate the large-|t| expansion of ``name`` in {G, G0, G1, F}."""
    lead, c = asymptotic_coefficients(name, n_terms)
    a = np.abs(np.asarray(t, dtype=float))
    inv2 = a ** -2.0
    return a ** -float(lead) * np.polynomial.polynomial.polyval(inv2, c)


def kernel_tail_integral(name, T, n_terms=12):
    """``int_T^infinity K(t) dt`` from the large-t expansion (T > 2)."""
    lead, c = asymptotic_coefficients(name, n_terms)
    powers = lead + 2 * np.arange(n_terms)
    return float(np.sum(c * T ** (1.0 - powers) / (powers - 1.0)))


# --------------------------------------------------------------------------
# total masses
# --------------------------------------------------------------------------

def kernel_mass(name, cfg=DEFAULT_KERNEL_CONFIG, u_max=None):
    """``int_R K(t) dt`` for ``K`` in {G0, G1, F} by quadrature.

    Uses ``t = sinh(u)`` with Gauss-Legendre panels on ``u``, refined
    geometrically towards ``u = 0`` where G0 and G1 are log-singular, and
    truncated at ``u_max`` where the integrand has dropped below 1e-16.
    The remaining tail is added from the large-t expansion.
    """
    funcs = {"G0": kernel_G0, "G1": kernel_G1, "F": kernel_F}
    if name not in funcs:
        raise ValueError(f"unknown kernel {name!r}")
    if u_max is None:
        u_max = 19.0
    edges = np.concatenate([geometric_edges(0.0, 1.0, smallest=1e-16)[:-1],
                            np.arange(1.0, u_max, 0.5), [u_max]])
    u, w = panel_rule(edges, 12)
    t = np.sinh(u)
    body = np.sum(w * np.cosh(u) * funcs[name](t, cfg))
    tail = kernel_tail_integral(name, float(np.sinh(u_max)))
    return 2.0 * (body + tail)


__all__ = [
    "KernelEvalConfig",
    "DEFAULT_KERNEL_CONFIG",
    "kernel_g",
    "kernel_G",
    "kernel_G_theta",
    "kernel_G0",
    "kernel_G1",
    "kernel_F",
    "asymptotic_coefficients",
    "kernel_asymptotic",
    "kernel_tail_integral",
    "kernel_mass",
]
