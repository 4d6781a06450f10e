"""Gauss-Legendre rules and the graded node sets shared by the integrators."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(a, b, n):
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def panel_rule(edges, n):
    """Composite Gauss-Legendre rule on consecutive panels given by ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = _leggauss(n)
    a = edges[:-1, None]
    half = 0.5 * (edges[1:, None] - a)
    nodes = a + half * (x[None, :] + 1.0)
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def geometric_edges(left, right, ratio=2.0, smallest=1e-14):
    """Panel edges from ``left`` to ``right`` refined geometrically towards ``left``.

    The panel widths grow by ``ratio`` from ``smallest * (right - left)``. The
    piece ``[left, left + smallest*(right-left)]`` is kept as the first panel.
    """
    width = right - left
    fr = [1.0]
    while fr[-1] > smallest:
        fr.append(fr[-1] / ratio)
    fr.append(0.0)
    return left + width * np.array(fr[::-1])


def sinh_rule(scale, length, n, v_panel=16.0):
    """Rule on [0, length] clustered at 0 on the length scale ``scale``.

    Uses the substitution ``x = scale * sinh(v)``; integrands with a near
    singularity of width ``scale`` at the origin become smooth in ``v``.
    ``scale`` may be an array, giving one rule per row. Long mapped ranges
    (``scale << length``) are split into equal panels of at most ``v_panel``
    in ``v``, each with ``n`` nodes, so that every row has the same size.
    """
    scale = np.asarray(scale, dtype=float)
    vmax = np.arcsinh(length / scale)
    n_pan = max(1, int(np.ceil(np.max(vmax) / v_panel)))
    x, w = _leggauss(n)
    # panel j covers [j, j + 1] * vmax / n_pan
    u = (np.arange(n_pan)[:, None] + 0.5 * (x + 1.0)[None, :]).ravel() / n_pan
    wu = np.tile(0.5 * w, n_pan) / n_pan
    v = vmax[..., None] * u
    jac = vmax[..., None] * wu
    nodes = scale[..., None] * np.sinh(v)
    weights = scale[..., None] * np.cosh(v) * jac
    return nodes, weights
