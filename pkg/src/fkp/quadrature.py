"""Composite Gauss rules on panels."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@lru_cache(maxsize=64)
def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(a, b, n):
    """Nodes and weights of the ``n``-point rule on ``[a, b]`` (scalars)."""
    x, w = _gl(n)
    h = 0.5 * (b - a)
    return 0.5 * (a + b) + h * x, h * w


def panel_rule(edges, n):
    """Composite ``n``-point Gauss-Legendre rule over consecutive ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = _gl(n)
    a, b = edges[:-1, None], edges[1:, None]
    h = 0.5 * (b - a)
    nodes = 0.5 * (a + b) + h * x[None, :]
    weights = h * w[None, :]
    return nodes.ravel(), weights.ravel()


def jacobi_left(a, b, n, power):
    """Rule for ``int_a^b (x - a)^power f(x) dx`` with the singular weight built in.

    Returned weights already contain ``(x - a)^power``; multiply by ``f`` only.
    """
    x, w = roots_jacobi(n, 0.0, power)
    h = 0.5 * (b - a)
    nodes = a + h * (x + 1.0)
    return nodes, w * h ** (power + 1.0)


def refine_edges(edges, factor=2):
    """Split every panel into ``factor`` equal parts."""
    edges = np.asarray(edges, dtype=float)
    parts = [np.linspace(a, b, factor + 1)[:-1] for a, b in zip(edges[:-1], edges[1:])]
    return np.concatenate(parts + [edges[-1:]])
