"""Even 2*pi-periodic profiles ``phi(t) = a_0 + sum_l a_l cos(l t)``."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ProfileError(ValueError):
    """Invalid profile data (non-positive radius, bad shape, too few samples)."""


def x_minus_sin(x):
    """``x - sin(x)`` without cancellation for small ``|x|``."""
    x = np.asarray(x, dtype=float)
    out = x - np.sin(x)
    small = np.abs(x) < 0.5
    if np.any(small):
        xs = x[small]
        x2 = xs * xs
        term = xs * x2 / 6.0
        acc = term.copy()
        for k in range(2, 12):
            term = -term * x2 / ((2 * k) * (2 * k + 1))
            acc += term
        out[small] = acc
    return out


def _sinc(x):
    return np.sinc(np.asarray(x) / np.pi)


@dataclass(frozen=True, eq=False)
class PeriodicProfile:
    """Cosine polynomial of degree ``N``; immutable.

    Parameters
    ----------
    coefficients : array_like
        ``a_0, ..., a_N``.
    """

    coefficients: np.ndarray

    def __post_init__(self):
        a = np.array(self.coefficients, dtype=float).ravel()
        if a.size == 0 or not np.all(np.isfinite(a)):
            raise ProfileError("coefficients must be a non-empty finite array")
        a.flags.writeable = False
        object.__setattr__(self, "coefficients", a)

    # -- construction -------------------------------------------------------
    @classmethod
    def constant(cls, lam):
        return cls([lam])

    @classmethod
    def from_samples(cls, values, N=None):
        """Profile from samples at ``t_j = 2 pi j / M``, ``j = 0..M-1``.

        Raises
        ------
        ProfileError
            If ``M < 2N + 1``.
        """
        v = np.asarray(values, dtype=float).ravel()
        M = v.size
        if N is None:
            N = (M - 1) // 2
        if M < 2 * N + 1:
            raise ProfileError(f"need at least {2 * N + 1} samples for N={N}, got {M}")
        X = np.fft.rfft(v) / M
        a = 2.0 * X.real[: N + 1]
        a[0] *= 0.5
        return cls(a)

    # -- basic data ---------------------------------------------------------
    @property
    def N(self):
        return self.coefficients.size - 1

    @property
    def modes(self):
        return np.arange(self.coefficients.size)

    def padded(self, N):
        """Same function with coefficient vector of length ``N + 1``."""
        a = np.zeros(max(N, self.N) + 1)
        a[: self.N + 1] = self.coefficients
        return PeriodicProfile(a[: N + 1]) if N >= self.N else self._truncate(N)

    def _truncate(self, N):
        if np.any(self.coefficients[N + 1:] != 0):
            raise ProfileError("cannot truncate nonzero modes")
        return PeriodicProfile(self.coefficients[: N + 1])

    def __add__(self, other):
        n = max(self.N, other.N)
        return PeriodicProfile(self.padded(n).coefficients + other.padded(n).coefficients)

    def scaled(self, c):
        return PeriodicProfile(c * self.coefficients)

    def __eq__(self, other):
        return isinstance(other, PeriodicProfile) and np.array_equal(
            self.coefficients, other.coefficients
        )

    __hash__ = None

    # -- evaluation ---------------------------------------------------------
    def eval(self, t):
        t = np.asarray(t, dtype=float)
        return np.cos(np.multiply.outer(t, self.modes)) @ self.coefficients

    def eval_deriv(self, t):
        t = np.asarray(t, dtype=float)
        l = self.modes
        return -np.sin(np.multiply.outer(t, l)) @ (l * self.coefficients)

    def eval_deriv2(self, t):
        t = np.asarray(t, dtype=float)
        l = self.modes
        return -np.cos(np.multiply.outer(t, l)) @ (l * l * self.coefficients)

    def lambda0(self, s, t):
        """``(phi(s) - phi(s - t)) / t``, continuous at ``t = 0`` with value ``phi'(s)``.

        Uses ``cos(ls) - cos(l(s-t)) = 2 cos(ls) sin^2(lt/2) - sin(ls) sin(lt)``
        divided through analytically, so no cancellation occurs for small t.
        """
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        l = self.modes
        ls = np.multiply.outer(s, l)
        lt = np.multiply.outer(t, l)
        half = np.sin(0.5 * lt)
        term = np.cos(ls) * half * (l * _sinc(0.5 * lt)) - np.sin(ls) * l * _sinc(lt)
        return term @ self.coefficients

    def lambda1(self, s, t):
        """``lambda0(s, t) - phi'(s)``; tends to 0 as ``t -> 0``."""
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        l = self.modes
        ls = np.multiply.outer(s, l)
        lt = np.multiply.outer(t, l)
        half = np.sin(0.5 * lt)
        with np.errstate(invalid="ignore", divide="ignore"):
            oms = np.where(lt == 0, 0.0, x_minus_sin(lt) / np.where(lt == 0, 1.0, lt))
        term = np.cos(ls) * half * (l * _sinc(0.5 * lt)) + np.sin(ls) * l * oms
        return term @ self.coefficients

    # -- sampling and checks ------------------------------------------------
    def to_samples(self, M):
        """Values at ``t_j = 2 pi j / M``; requires ``M >= 2N + 1``."""
        if M < 2 * self.N + 1:
            raise ProfileError(f"need M >= {2 * self.N + 1} samples, got {M}")
        return self.eval(2.0 * np.pi * np.arange(M) / M)

    def min_value(self, samples=None):
        if samples is None:
            samples = 16 * self.N + 64
        t = np.linspace(0.0, np.pi, samples)
        return float(np.min(self.eval(t)))

    def check_positive(self):
        """Raise ``ProfileError`` unless the profile is positive on a dense grid."""
        m = self.min_value()
        if not m > 0:
            raise ProfileError(f"profile is not positive (min = {m:.3e})")
        return self

    def effective_bandwidth(self, tol=1e-14):
        """Highest mode whose coefficient exceeds ``tol * max|a|``."""
        a = np.abs(self.coefficients)
        idx = np.nonzero(a[1:] > tol * max(a.max(), 1e-300))[0]
        return int(idx[-1] + 1) if idx.size else 0

    # -- serialization ------------------------------------------------------
    def to_dict(self):
        return {"N": self.N, "a": [float(x) for x in self.coefficients]}

    @classmethod
    def from_dict(cls, d):
        try:
            a = d["a"]
            N = int(d.get("N", len(a) - 1))
        except (KeyError, TypeError) as exc:
            raise ProfileError(f"malformed profile record: {exc}") from None
        if len(a) != N + 1:
            raise ProfileError(f"profile N={N} but {len(a)} coefficients")
        try:
            return cls(np.asarray(a, dtype=float))
        except (TypeError, ValueError) as exc:
            raise ProfileError(f"malformed coefficients: {exc}") from None

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def from_samples(values, N=None):
    return PeriodicProfile.from_samples(values, N)


def to_samples(profile, M):
    return profile.to_samples(M)
