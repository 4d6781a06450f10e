"""Fourier-Galerkin Newton continuation of the bifurcating branches.

Branch k is parametrized by its amplitude s,

    phi(t) = lambda + s (cos(k t) + mu(t)),

with mu even, zero-mean and without a ``cos(k .)`` component (the coefficient
is simply not represented). The unknowns are ``lambda`` and the free
coefficients of mu; the equations are the cosine projections

    R_l = <H(phi) + 2 pi, cos(l .)> / pi,   l = 1..N,

computed by the trapezoidal rule on ``s_j = pi j / M``, ``j = 0..M`` with
``M = 2N``. The system is divided by s so that it stays regular at s -> 0;
``lambda`` is then determined by the kernel-mode equation through
transversality ``V'(lambda*) != 0``.

The constant mode is not part of the system. It is nevertheless controlled:
for every positive profile ``int (H(phi) + 2 pi) phi sqrt(1 + phi'^2) = 0``
(divergence theorem for the field of the uniformly charged tube), so once
modes 1..N of the residual vanish the mean is pinned up to truncation. It is
reported as a diagnostic.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from math import pi

import numpy as np

from .dispersion import find_lambda_star
from .operator_eval import DEFAULT_QUAD, QuadratureSpec, h_regularized
from .profile import PeriodicProfile, ProfileError

log = logging.getLogger(__name__)

TWO_PI = 2.0 * pi


class NewtonError(RuntimeError):
    """Newton iteration failed (no convergence or loss of positivity)."""


@dataclass(frozen=True)
class SolverConfig:
    """Continuation and Newton settings.

    Attributes
    ----------
    N : int
        Galerkin truncation (modes 1..N).
    newton_tol : float
        Target for the sup-norm of the scaled coefficient residual ``R / s``.
    max_newton_iters : int
    fd_eps : float
        Relative forward-difference step of the Jacobian columns.
    s_step, s_max : float
        Amplitude increment and final amplitude (both signs are traced).
    quad : QuadratureSpec
        Operator quadrature of the Galerkin residual.
    dense_grid : int
        Points on [0, pi] used by :func:`verify_branch_point`.
    verify_tol : float
        Dense-grid sup-norm below which a point counts as verified.
    mode0_flag : float
        Mode-0 residual above which a warning is logged.
    workers : int
        Threads for the Jacobian columns.
    """

    N: int = 32
    newton_tol: float = 1e-10
    max_newton_iters: int = 25
    fd_eps: float = 1e-6
    s_step: float = 5e-3
    s_max: float = 0.05
    quad: QuadratureSpec = field(default_factory=lambda: DEFAULT_QUAD)
    dense_grid: int = 256
    verify_tol: float = 1e-7
    mode0_flag: float = 1e-6
    workers: int = 1

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if self.max_newton_iters < 1 or self.workers < 1 or self.dense_grid < 8:
            raise ValueError("max_newton_iters, workers must be >= 1 and dense_grid >= 8")
        for name in ("newton_tol", "fd_eps", "s_step", "s_max", "verify_tol", "mode0_flag"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def check_mode(self, k):
        if k < 1:
            raise ValueError(f"branch mode k must be >= 1, got {k}")
        if self.N < 2 * k:
            raise ValueError(f"N = {self.N} too small for mode k = {k} (need N >= 2k)")


@dataclass
class BranchPoint:
    """One converged point ``phi = lam + s (cos(k .) + mu)`` of branch k."""

    k: int
    s: float
    lam: float
    mu: PeriodicProfile
    residual_galerkin: float = 0.0
    residual_grid_sup: float = float("nan")
    mode0_residual: float = float("nan")
    verified: bool = False
    iterations: int = 0

    def profile(self):
        return build_profile(self.lam, self.mu.coefficients, self.k, self.s)

    def to_dict(self):
        return {
            "k": int(self.k),
            "s": float(self.s),
            "lambda": float(self.lam),
            "mu": self.mu.to_dict(),
            "residual_galerkin": float(self.residual_galerkin),
            "residual_sup": float(self.residual_grid_sup),
            "mode0_residual": float(self.mode0_residual),
            "verified": bool(self.verified),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            k=int(d["k"]),
            s=float(d["s"]),
            lam=float(d["lambda"]),
            mu=PeriodicProfile.from_dict(d["mu"]),
            residual_galerkin=float(d.get("residual_galerkin", 0.0)),
            residual_grid_sup=float(d.get("residual_sup", float("nan"))),
            mode0_residual=float(d.get("mode0_residual", float("nan"))),
            verified=bool(d.get("verified", False)),
        )


@dataclass
class VerificationReport:
    sup_norm: float
    mode0_residual: float
    flux_residual: float
    min_phi: float
    orthogonality: float
    verified: bool
    tol: float

    def to_dict(self):
        return {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v))
                for k, v in self.__dict__.items()}


@dataclass
class BranchResult:
    """Points of a traced branch ordered by s, and why each side stopped."""

    k: int
    points: list
    stop_reason: dict

    @property
    def complete(self):
        return all(r is None for r in self.stop_reason.values())

    def lambdas(self):
        return np.array([p.lam for p in self.points])

    def amplitudes(self):
        return np.array([p.s for p in self.points])


# --------------------------------------------------------------------------
# residual
# --------------------------------------------------------------------------

def build_profile(lam, mu_coeffs, k, s):
    """``lam + s (cos(k .) + mu)`` as a :class:`PeriodicProfile`."""
    mu = np.asarray(mu_coeffs, dtype=float)
    if mu.size <= k:
        mu = np.pad(mu, (0, k + 1 - mu.size))
    if mu[0] != 0.0 or mu[k] != 0.0:
        raise ProfileError("mu must have zero mean and no cos(k .) component")
    a = s * mu
    a[0] += lam
    a[k] += s
    return PeriodicProfile(a)


def galerkin_grid(N):
    M = 2 * N
    return np.pi * np.arange(M + 1) / M


def _projections(values, N):
    """Cosine coefficients 0..N of an even function sampled on ``galerkin_grid(N)``."""
    M = values.size - 1
    w = np.full(M + 1, 1.0 / M)
    w[0] = w[-1] = 0.5 / M
    l = np.arange(N + 1)
    c = 2.0 * np.cos(np.multiply.outer(l, np.pi * np.arange(M + 1) / M)) @ (w * values)
    c[0] *= 0.5
    return c


def galerkin_coefficients(profile, N, quad=DEFAULT_QUAD):
    """Coefficients 0..N of ``H(profile) + 2 pi``."""
    r = h_regularized(profile, galerkin_grid(N), quad) + TWO_PI
    return _projections(r, N)


def residual_galerkin(lam, mu_coeffs, k, s, quad=DEFAULT_QUAD, N=None):
    """Galerkin residual of branch k at amplitude s.

    Returns
    -------
    proj : ndarray
        ``<H(phi) + 2 pi, cos(l .)> / pi`` for l = 1..N.
    mode0 : float
        The mean of ``H(phi) + 2 pi`` (diagnostic).
    """
    mu = np.asarray(mu_coeffs, dtype=float)
    if N is None:
        N = max(mu.size - 1, 2 * k)
    phi = build_profile(lam, mu, k, s)
    phi.check_positive()
    c = galerkin_coefficients(phi, N, quad)
    return c[1:], float(c[0])


# --------------------------------------------------------------------------
# Newton
# --------------------------------------------------------------------------

@dataclass
class JacobianCache:
    """Jacobian carried between Newton calls (Broyden-updated, FD-refreshed)."""

    matrix: np.ndarray = None
    fd_evaluations: int = 0


class _System:
    def __init__(self, k, s, cfg):
        self.k, self.s, self.cfg = k, s, cfg
        self.N = cfg.N
        self.free = np.array([l for l in range(1, self.N + 1) if l != k])

    def unpack(self, x):
        mu = np.zeros(self.N + 1)
        mu[self.free] = x[1:]
        return float(x[0]), mu

    def pack(self, lam, mu):
        mu = np.asarray(mu, dtype=float)
        full = np.zeros(self.N + 1)
        n = min(mu.size, self.N + 1)
        full[:n] = mu[:n]
        return np.r_[lam, full[self.free]]

    def positive(self, x):
        lam, mu = self.unpack(x)
        return build_profile(lam, mu, self.k, self.s).min_value() > 0

    def __call__(self, x):
        lam, mu = self.unpack(x)
        proj, mode0 = residual_galerkin(lam, mu, self.k, self.s, self.cfg.quad, self.N)
        return proj / self.s, mode0

    def fd_jacobian(self, x, F0):
        eps = self.cfg.fd_eps * np.maximum(1.0, np.abs(x))

        def column(j):
            xj = x.copy()
            xj[j] += eps[j]
            return (self(xj)[0] - F0) / eps[j]

        if self.cfg.workers > 1:
            with ThreadPoolExecutor(self.cfg.workers) as ex:
                cols = list(ex.map(column, range(x.size)))
        else:
            cols = [column(j) for j in range(x.size)]
        return np.column_stack(cols)


def newton_solve(k, s, initial, cfg=None, cache=None):
    """Solve the Galerkin system of branch k at amplitude s.

    Parameters
    ----------
    initial : tuple
        ``(lambda, mu_coeffs)`` predictor.
    cache : JacobianCache, optional
        Jacobian reused from earlier calls; a forward-difference Jacobian is
        built when it is empty or when convergence stalls, and it is refined
        by Broyden updates in between.

    Raises
    ------
    NewtonError
        On non-convergence within ``max_newton_iters`` or if step halving
        cannot keep the profile positive.
    """
    cfg = cfg or SolverConfig()
    cfg.check_mode(k)
    lam0, mu0 = initial
    if s == 0:
        mu = np.zeros(cfg.N + 1)
        return BranchPoint(k, 0.0, float(lam0), PeriodicProfile(mu), 0.0)
    cache = cache if cache is not None else JacobianCache()
    sys_ = _System(k, s, cfg)
    x = sys_.pack(lam0, mu0)
    if not sys_.positive(x):
        raise NewtonError(f"predictor is not positive at s = {s}")
    F, mode0 = sys_(x)
    J = cache.matrix
    if J is None or J.shape != (x.size, x.size):
        J = sys_.fd_jacobian(x, F)
        cache.fd_evaluations += 1
    fresh = J is not cache.matrix
    nF = np.max(np.abs(F))
    it = 0
    while nF >= cfg.newton_tol:
        if it >= cfg.max_newton_iters:
            raise NewtonError(f"no convergence at s = {s}: |F| = {nF:.3e} after {it} iterations")
        it += 1
        dx = np.linalg.solve(J, -F)
        step = 1.0
        for _ in range(12):
            if sys_.positive(x + step * dx):
                break
            step *= 0.5
        else:
            raise NewtonError(f"positivity lost at s = {s}")
        dx = step * dx
        x_new = x + dx
        F_new, mode0 = sys_(x_new)
        nF_new = np.max(np.abs(F_new))
        if nF_new > 0.5 * nF and not fresh:
            # stalled with an old Jacobian: rebuild it here
            J = sys_.fd_jacobian(x_new, F_new)
            cache.fd_evaluations += 1
            fresh = True
        else:
            J = J + np.outer(F_new - F - J @ dx, dx) / (dx @ dx)
            fresh = False
        x, F, nF = x_new, F_new, nF_new
        log.debug("k=%d s=%.4g iter %d |F|=%.3e", k, s, it, nF)
    cache.matrix = J
    lam, mu = sys_.unpack(x)
    return BranchPoint(
        k, float(s), lam, PeriodicProfile(mu), residual_galerkin=float(nF * abs(s)),
        mode0_residual=mode0, iterations=it,
    )


def jacobian_at_constant(lam, N, quad=DEFAULT_QUAD, fd_eps=1e-6):
    """Forward-difference Jacobian of ``(R_1..R_N)`` w.r.t. ``(a_1..a_N)`` at a constant.

    At ``lam`` the exact Jacobian is ``diag(-V(lam l)/lam)``.
    """
    base = galerkin_coefficients(PeriodicProfile.constant(lam), N, quad)[1:]
    h = fd_eps * lam
    J = np.empty((N, N))
    for l in range(1, N + 1):
        a = np.zeros(l + 1)
        a[0] = lam
        a[l] = h
        J[:, l - 1] = (galerkin_coefficients(PeriodicProfile(a), N, quad)[1:] - base) / h
    return J


# --------------------------------------------------------------------------
# verification and continuation
# --------------------------------------------------------------------------

def verify_branch_point(point, dense_grid=256, quad=None, tol=1e-7):
    """Recompute ``H(phi) + 2 pi`` on a dense grid at doubled quadrature.

    Returns a :class:`VerificationReport`; the point is verified when the
    sup-norm is below ``tol``. Failures are reported, not raised.
    """
    quad = quad or DEFAULT_QUAD.doubled()
    phi = point.profile()
    min_phi = phi.min_value()
    orth = float(point.mu.coefficients[point.k]) if point.mu.N >= point.k else 0.0
    if not min_phi > 0:
        return VerificationReport(np.inf, np.inf, np.inf, min_phi, orth, False, tol)
    t = np.linspace(0.0, pi, dense_grid)
    r = h_regularized(phi, t, quad) + TWO_PI
    w = np.full(t.size, 1.0)
    w[0] = w[-1] = 0.5
    w /= w.sum()
    weight = phi.eval(t) * np.sqrt(1.0 + phi.eval_deriv(t) ** 2)
    sup = float(np.max(np.abs(r)))
    return VerificationReport(
        sup_norm=sup,
        mode0_residual=float(w @ r),
        flux_residual=float(w @ (r * weight)),
        min_phi=min_phi,
        orthogonality=orth,
        verified=bool(sup < tol and orth == 0.0),
        tol=tol,
    )


def _trace_side(k, sign, cfg, lam_k):
    n_steps = int(np.ceil(cfg.s_max / cfg.s_step - 1e-9))
    hist = [(0.0, lam_k, np.zeros(cfg.N + 1))]
    points = []
    cache = JacobianCache()
    reason = None
    for i in range(1, n_steps + 1):
        s = sign * min(i * cfg.s_step, cfg.s_max)
        if len(hist) >= 2:
            (s1, l1, m1), (s2, l2, m2) = hist[-2], hist[-1]
            r = (s - s2) / (s2 - s1)
            guess = (l2 + r * (l2 - l1), m2 + r * (m2 - m1))
        else:
            guess = (hist[-1][1], hist[-1][2])
        try:
            pt = newton_solve(k, s, guess, cfg, cache)
        except (NewtonError, ProfileError, np.linalg.LinAlgError) as exc:
            reason = f"stopped at s = {s:.6g}: {exc}"
            break
        rep = verify_branch_point(pt, cfg.dense_grid, cfg.quad.doubled(), cfg.verify_tol)
        pt.residual_grid_sup = rep.sup_norm
        pt.mode0_residual = rep.mode0_residual
        pt.verified = rep.verified
        if abs(rep.mode0_residual) > cfg.mode0_flag:
            log.warning("mode-0 residual %.3e at k=%d s=%.4g", rep.mode0_residual, k, s)
        if not rep.verified:
            reason = f"stopped at s = {s:.6g}: verification failed (sup = {rep.sup_norm:.3e})"
            break
        log.info("k=%d s=%+.4f lambda=%.15f iters=%d sup=%.2e", k, s, pt.lam, pt.iterations,
                 rep.sup_norm)
        points.append(pt)
        hist.append((s, pt.lam, pt.mu.coefficients.copy()))
    return points, reason


def trace_branch(k, cfg=None, lambda_star=None):
    """Trace branch k for ``s`` in ``[-s_max, s_max]``.

    Starts at ``(lambda*/k, mu = 0)``; each side stops early with a reason on
    Newton failure, positivity loss or failed verification.
    """
    cfg = cfg or SolverConfig()
    cfg.check_mode(k)
    lam_star = lambda_star if lambda_star is not None else find_lambda_star().lambda_star
    lam_k = lam_star / k
    origin = BranchPoint(k, 0.0, lam_k, PeriodicProfile(np.zeros(cfg.N + 1)))
    rep = verify_branch_point(origin, cfg.dense_grid, cfg.quad.doubled(), cfg.verify_tol)
    origin.residual_grid_sup = rep.sup_norm
    origin.mode0_residual = rep.mode0_residual
    origin.verified = rep.verified
    neg, r_neg = _trace_side(k, -1.0, cfg, lam_k)
    pos, r_pos = _trace_side(k, 1.0, cfg, lam_k)
    return BranchResult(k, neg[::-1] + [origin] + pos, {"-": r_neg, "+": r_pos})


def limit_at_zero(result, degree=4):
    """``lambda(0)`` extrapolated from the nonzero-amplitude points of a branch."""
    s = result.amplitudes()
    lam = result.lambdas()
    keep = s != 0
    s, lam = s[keep], lam[keep]
    if s.size < degree + 1:
        degree = max(s.size - 1, 0)
    coef = np.polynomial.polynomial.polyfit(s, lam, degree)
    return float(coef[0])


def refine_point(point, N, cfg=None):
    """Re-solve a converged point with truncation N (mesh-independence check).

    The Jacobian is seeded with the FD Jacobian of the original truncation and
    the analytic diagonal ``-V(lam l)/lam`` for the added modes.
    """
    from .linearized import preconditioner_diagonal

    cfg = replace(cfg or SolverConfig(), N=N)
    k, s = point.k, point.s
    old = _System(k, s, replace(cfg, N=point.mu.N))
    x_old = old.pack(point.lam, point.mu.coefficients)
    J_old = old.fd_jacobian(x_old, old(x_old)[0])
    new = _System(k, s, cfg)
    diag = preconditioner_diagonal(point.lam, N)
    J = np.diag(np.r_[0.0, diag[new.free - 1]])
    n = J_old.shape[0]
    J[:n, :n] = J_old
    return newton_solve(k, s, (point.lam, point.mu.coefficients), cfg, JacobianCache(J))
