"""Modified Bessel functions I_0, I_1 and K_0, K_1, K_2 for real arguments.

Evaluation regimes (all vectorized over ``x``):

* ``I_nu``: ascending power series up to ``asymptotic_cutoff``, Hankel
  asymptotic expansion beyond.
* ``K_0``, ``K_1``: logarithmic ascending series for ``x <= series_cutoff``,
  Steed's continued fraction (Temme's CF2) on the middle band, Hankel
  asymptotic expansion beyond ``asymptotic_cutoff``.
* ``K_2`` from the recurrence ``K_2 = K_0 + 2 K_1 / x``.

The scaled helpers ``_i_scaled`` (``e^{-x} I``) and ``_k_scaled``
(``e^{x} K``) are used internally so that products such as ``I_1 K_1`` stay
finite for large arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.57721566490153286061


@dataclass(frozen=True)
class BesselAccuracy:
    """Evaluation policy for the Bessel routines.

    ``series_cutoff`` separates the logarithmic K-series from the continued
    fraction; ``asymptotic_cutoff`` is where both families switch to the
    large-argument expansion.
    """

    target_rel_error: float = 1e-12
    series_cutoff: float = 2.0
    asymptotic_cutoff: float = 25.0

    def __post_init__(self):
        if not self.target_rel_error > 0:
            raise ValueError("target_rel_error must be positive")
        if not 0 < self.series_cutoff <= self.asymptotic_cutoff:
            raise ValueError("need 0 < series_cutoff <= asymptotic_cutoff")


DEFAULT_ACCURACY = BesselAccuracy()

_TERM_EPS = 1e-17
_MAX_TERMS = 500


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


# --------------------------------------------------------------------------
# ascending series
# --------------------------------------------------------------------------

def _i_series(nu, x):
    """sum_m (x/2)^(nu+2m) / (m! (m+nu)!)"""
    q = 0.25 * x * x
    term = (0.5 * x) ** nu / math.factorial(nu) * np.ones_like(x)
    total = term.copy()
    for m in range(1, _MAX_TERMS):
        term = term * q / (m * (m + nu))
        total += term
        if np.all(term <= _TERM_EPS * total):
            break
    return total


def _k01_series(x):
    """K_0 and K_1 from the logarithmic ascending series (A&S 9.6.13, 9.6.11)."""
    q = 0.25 * x * x
    i0 = _i_series(0, x)
    i1 = _i_series(1, x)
    log_half = np.log(0.5 * x)

    # K_0: sum_{k>=1} q^k/(k!)^2 H_k
    t = np.ones_like(x)
    h = 0.0
    s0 = np.zeros_like(x)
    # K_1: sum_{k>=0} q^k/(k!(k+1)!) (psi(k+1) + psi(k+2))
    u = np.ones_like(x)
    s1 = (1.0 - 2 * EULER_GAMMA) * u
    for k in range(1, _MAX_TERMS):
        t = t * q / (k * k)
        h += 1.0 / k
        s0 += t * h
        u = u * q / (k * (k + 1))
        du = u * (h + (h + 1.0 / (k + 1)) - 2 * EULER_GAMMA)
        s1 += du
        if np.all(np.abs(t * h) <= _TERM_EPS * np.abs(s0) + 1e-300) and np.all(
            np.abs(du) <= _TERM_EPS * np.abs(s1) + 1e-300
        ):
            break
    k0 = -(log_half + EULER_GAMMA) * i0 + s0
    k1 = 1.0 / x + log_half * i1 - 0.25 * x * s1
    return k0, k1


# --------------------------------------------------------------------------
# continued fraction (Steed / Temme CF2, order 0)
# --------------------------------------------------------------------------

def _k01_cf2_scaled(x):
    """e^x K_0(x), e^x K_1(x) for x >= ~2 via Steed's algorithm."""
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, 10_000):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels) < 1e-17 * np.abs(s)):
            break
    else:  # pragma: no cover - the fraction converges for every x >= 2
        raise RuntimeError("CF2 did not converge")
    h = a1 * h
    k0 = np.sqrt(np.pi / (2.0 * x)) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


# --------------------------------------------------------------------------
# Hankel asymptotic expansions
# --------------------------------------------------------------------------

def _hankel_sum(nu, x, alternating):
    mu = 4.0 * nu * nu
    term = np.ones_like(x)
    total = term.copy()
    for k in range(1, 200):
        new = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if alternating:
            new = -new
        # stop at the smallest term (the series is asymptotic)
        if np.all(np.abs(new) < _TERM_EPS * np.abs(total)):
            total += new
            break
        grow = np.abs(new) > np.abs(term)
        new = np.where(grow, 0.0, new)
        total += new
        term = new
        if np.all(term == 0.0):
            break
    return total


def _i_asym_scaled(nu, x):
    return _hankel_sum(nu, x, alternating=True) / np.sqrt(2.0 * np.pi * x)


def _k_asym_scaled(nu, x):
    return np.sqrt(np.pi / (2.0 * x)) * _hankel_sum(nu, x, alternating=False)


# --------------------------------------------------------------------------
# scaled kernels used by the public functions and by the dispersion module
# --------------------------------------------------------------------------

def _i_scaled(nu, x, acc=DEFAULT_ACCURACY):
    """e^{-x} I_nu(x) for an array x >= 0."""
    out = np.empty_like(x)
    lo = x <= acc.asymptotic_cutoff
    if np.any(lo):
        xs = x[lo]
        out[lo] = _i_series(nu, xs) * np.exp(-xs)
    if np.any(~lo):
        out[~lo] = _i_asym_scaled(nu, x[~lo])
    return out


def _k01_scaled(x, acc=DEFAULT_ACCURACY):
    """(e^x K_0(x), e^x K_1(x)) for an array x > 0."""
    k0 = np.empty_like(x)
    k1 = np.empty_like(x)
    ser = x <= acc.series_cutoff
    asy = x > acc.asymptotic_cutoff
    mid = ~(ser | asy)
    if np.any(ser):
        xs = x[ser]
        a, b = _k01_series(xs)
        e = np.exp(xs)
        k0[ser], k1[ser] = a * e, b * e
    if np.any(mid):
        k0[mid], k1[mid] = _k01_cf2_scaled(x[mid])
    if np.any(asy):
        xa = x[asy]
        k0[asy] = _k_asym_scaled(0, xa)
        k1[asy] = _k_asym_scaled(1, xa)
    return k0, k1


# --------------------------------------------------------------------------
# public surface
# --------------------------------------------------------------------------

def bessel_i(nu, x, acc=DEFAULT_ACCURACY):
    """Modified Bessel function of the first kind, I_nu(x), nu in {0, 1}.

    Parameters
    ----------
    nu : int
        Order, 0 or 1.
    x : float or array_like
        Nonnegative argument.

    Raises
    ------
    ValueError
        For an unsupported order or a negative argument.
    """
    if nu not in (0, 1):
        raise ValueError(f"bessel_i supports nu in {{0, 1}}, got {nu!r}")
    arr, scalar = _as_array(x)
    if np.any(~(arr >= 0)):
        raise ValueError("bessel_i requires x >= 0")
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    lo = arr <= acc.asymptotic_cutoff
    if np.any(lo):
        out[lo] = _i_series(nu, arr[lo])
    if np.any(~lo):
        xa = arr[~lo]
        out[~lo] = _i_asym_scaled(nu, xa) * np.exp(xa)
    return _ret(out.reshape(np.shape(x)), scalar)


def bessel_k(nu, x, acc=DEFAULT_ACCURACY):
    """Modified Bessel function of the second kind, K_nu(x), nu in {0, 1, 2}.

    Raises
    ------
    ValueError
        For an unsupported order or a nonpositive argument.
    """
    if nu not in (0, 1, 2):
        raise ValueError(f"bessel_k supports nu in {{0, 1, 2}}, got {nu!r}")
    arr, scalar = _as_array(x)
    if np.any(~(arr > 0)):
        raise ValueError("bessel_k requires x > 0")
    arr = np.atleast_1d(arr)
    k0, k1 = _k01_scaled(arr, acc)
    if nu == 0:
        ks = k0
    elif nu == 1:
        ks = k1
    else:
        ks = k0 + 2.0 * k1 / arr
    out = ks * np.exp(-arr)
    return _ret(out.reshape(np.shape(x)), scalar)


def bessel_ik_products(x, acc=DEFAULT_ACCURACY):
    """Return (I0 K0, I0 K1, I1 K0, I1 K1) at x > 0 without overflow."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(~(arr > 0)):
        raise ValueError("bessel_ik_products requires x > 0")
    i0 = _i_scaled(0, arr, acc)
    i1 = _i_scaled(1, arr, acc)
    k0, k1 = _k01_scaled(arr, acc)
    shape = np.shape(x)
    return tuple(v.reshape(shape) for v in (i0 * k0, i0 * k1, i1 * k0, i1 * k1))
