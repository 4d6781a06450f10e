"""The linearized operator at constant profiles.

At the constant profile ``lambda`` the derivative of ``Phi(lambda, .) = H + 2 pi``
is ``-L_lambda / lambda`` with

    L_lambda v(s) = PV int_R (v(s) - v(s - lambda t)) G(t) dt
                    + int_R v(s - lambda t) F(t) dt - 2 pi v(s).

Since G is even, the principal value is symmetrized before discretization,

    int_0^inf (2 v(s) - v(s - lambda t) - v(s + lambda t)) G(t) dt,

which is absolutely convergent: the second difference is O(t^2) against
``G = 4 g / t^2``. On cosines ``L_lambda cos(k .) = V(lambda k) cos(k .)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import pi

import numpy as np

from .dispersion import QuadratureError, _t_table, _tail, dispersion_V
from .kernels import DEFAULT_KERNEL_CONFIG, KernelEvalConfig
from .operator_eval import DEFAULT_QUAD, QuadratureSpec, h_regularized
from .profile import PeriodicProfile, ProfileError

TWO_PI = 2.0 * pi
PANEL_WIDTH = 0.05


@dataclass(frozen=True)
class LinearizedApplyConfig:
    """Settings for :func:`apply_L` and :func:`eigen_check_fd`.

    Attributes
    ----------
    pv_quad : KernelEvalConfig
        Kernel accuracy and truncation of the symmetrized axial integral.
    fd_step : float
        Relative step ``h / lambda`` of the directional differences.
    quad : QuadratureSpec
        Operator quadrature used by the finite differences.
    fd_samples : int
        Number of points on [0, pi] at which the difference quotient is
        sampled before projection.
    """

    pv_quad: KernelEvalConfig = field(default_factory=lambda: DEFAULT_KERNEL_CONFIG)
    fd_step: float = 1e-5
    quad: QuadratureSpec = field(default_factory=lambda: DEFAULT_QUAD)
    fd_samples: int = 33

    def __post_init__(self):
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")
        if self.fd_samples < 3:
            raise ValueError("fd_samples must be at least 3")


DEFAULT_LINEAR_CONFIG = LinearizedApplyConfig()


def _check_input(lam, v):
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if not isinstance(v, PeriodicProfile):
        v = PeriodicProfile(v)
    if abs(v.coefficients[0]) > 1e-12 * max(1.0, np.max(np.abs(v.coefficients))):
        raise ProfileError("apply_L expects a zero-mean direction (a_0 = 0)")
    return v


def _apply_once(lam, b, s, cfg, nodes):
    t, w, g, F = _t_table(cfg, nodes, PANEL_WIDTH)
    l = np.arange(b.size)
    bc = np.cos(np.multiply.outer(s, l)) * b  # rows: s, cols: modes
    lt = np.multiply.outer(t, lam * l)
    # 2v(s) - v(s-x) - v(s+x) = sum b_l cos(ls) 4 sin^2(lx/2), exact near t = 0
    second = bc @ (4.0 * np.sin(0.5 * lt) ** 2).T
    pair = bc @ (2.0 * np.cos(lt)).T
    body = (second * (4.0 * g / (t * t)) + pair * F) @ w
    # beyond T the integrand is summed mode by mode from the kernel expansions
    T = cfg.tail_truncation
    tails = np.array([2.0 * _tail(lam * m, T) if m > 0 else 0.0 for m in l])
    return body + bc @ tails - TWO_PI * (bc @ np.ones(b.size))


def apply_L(lam, v, cfg=DEFAULT_LINEAR_CONFIG, samples=None):
    """``L_lambda v`` for a zero-mean even direction ``v``.

    The symmetrized integral is evaluated on ``samples`` equispaced points of
    the period and the result is returned as a cosine polynomial of the same
    degree as ``v``.

    Raises
    ------
    QuadratureError
        If two panel rules of different order disagree beyond
        ``cfg.pv_quad.target_rel_error``.
    """
    v = _check_input(lam, v)
    b = v.coefficients
    N = max(v.N, 1)
    M = samples or (4 * N + 4)
    s = TWO_PI * np.arange(M) / M
    fine = _apply_once(lam, b, s, cfg.pv_quad, 12)
    coarse = _apply_once(lam, b, s, cfg.pv_quad, 10)
    scale = 1.0 + np.max(np.abs(fine))
    err = np.max(np.abs(fine - coarse))
    if err > cfg.pv_quad.target_rel_error * scale:
        raise QuadratureError(f"apply_L not converged (diff {err:.2e})")
    return PeriodicProfile.from_samples(fine, N)


def _cos_projection(values, s, k):
    """``<f, cos(k .)> / pi`` from samples of an even f on an equispaced [0, pi] grid."""
    w = np.full(s.size, 1.0)
    w[0] = w[-1] = 0.5
    h = s[1] - s[0]
    c = np.cos(np.multiply.outer(np.atleast_1d(k), s))
    return (2.0 / pi) * h * (c * (w * values)).sum(axis=-1)


def fd_derivative_modes(lam, k, cfg=DEFAULT_LINEAR_CONFIG, n_modes=None):
    """Cosine coefficients ``0..n_modes`` of the directional derivative of H.

    The direction is ``cos(k .)`` at the constant ``lam``. Forward differences
    at steps h and 2h are combined by Richardson extrapolation. Coefficient 0
    is the mode-0 content (zero in exact arithmetic at constants).
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if k < 1:
        raise ValueError(f"mode k must be >= 1, got {k}")
    if n_modes is None:
        n_modes = 2 * k
    s = np.linspace(0.0, pi, max(cfg.fd_samples, 4 * k + 1))
    h = cfg.fd_step * lam
    base = h_regularized(PeriodicProfile.constant(lam), s, cfg.quad)

    def quotient(step):
        a = np.zeros(k + 1)
        a[0] = lam
        a[k] = step
        return (h_regularized(PeriodicProfile(a), s, cfg.quad) - base) / step

    d = 2.0 * quotient(h) - quotient(2.0 * h)
    coef = _cos_projection(d, s, np.arange(n_modes + 1))
    coef[0] *= 0.5
    return coef


def eigen_check_fd(lam, k, cfg=DEFAULT_LINEAR_CONFIG):
    """Estimated eigenvalue of ``D_phi H(lam)`` on ``cos(k .)``; compare with ``-V(lam k)/lam``."""
    return float(fd_derivative_modes(lam, k, cfg, n_modes=k)[k])


def preconditioner_diagonal(lam, N):
    """``-V(lam l)/lam`` for l = 1..N, the spectrum of ``D_phi Phi(lam, 0)``."""
    l = np.arange(1, N + 1)
    return -dispersion_V(lam * l) / lam


def spectral_solve(lambda_star, h, tol=1e-12):
    """Solve ``L_{lambda*} w = h`` mode by mode, ``w_l = <h, e_l> / (pi V(lambda* l))``.

    ``h`` must have no constant and no ``cos(.)`` component (the kernel of
    ``L_{lambda*}``); ``w`` gets the same zero coefficients.

    Raises
    ------
    ProfileError
        If h has a mode-0 or mode-1 component.
    ArithmeticError
        If ``|V(lambda* l)| < tol`` for some retained l >= 2, which would
        contradict the uniqueness of the zero of V.
    """
    if not isinstance(h, PeriodicProfile):
        h = PeriodicProfile(h)
    c = h.coefficients
    big = max(1.0, float(np.max(np.abs(c))))
    if abs(c[0]) > 1e-12 * big or (c.size > 1 and abs(c[1]) > 1e-12 * big):
        raise ProfileError("spectral_solve needs a_0 = a_1 = 0")
    w = np.zeros_like(c)
    if c.size > 2:
        l = np.arange(2, c.size)
        V = dispersion_V(lambda_star * l)
        if np.any(np.abs(V) < tol):
            raise ArithmeticError(f"V(lambda* l) vanishes for l = {l[np.abs(V) < tol]}")
        # <h, e_l> = pi c_l
        w[2:] = (pi * c[2:]) / (pi * V)
    return PeriodicProfile(w)
