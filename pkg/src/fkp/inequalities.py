"""Numerical checks of functional inequalities attached to the fKP equation.

Everything here measures ratios; no sharp constant is claimed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import PreconditionError
from .quadrature import gauss_legendre, jacobi_left
from .spectral import (
    Field,
    Grid2D,
    antideriv_x_deriv_y,
    deriv_x,
    frac_deriv_x,
    norm_l2,
    norm_linf,
    norm_xs,
)
from .symbols import SymbolFamily, eval_w

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CriticalExponents:
    alpha: float
    s_alpha: float
    l2_critical: float
    energy_critical: float
    l2_scaling_exponent: float

    def summary(self):
        return (f"s_alpha={self.s_alpha:.5g} l2_critical={self.l2_critical:.5g} "
                f"energy_critical={self.energy_critical:.5g}")


def critical_exponents(alpha) -> CriticalExponents:
    """Regularity threshold ``2 - alpha/4``, the two critical dispersion values and the L2 scaling exponent."""
    if not 0 < alpha <= 2:
        raise PreconditionError(f"alpha must lie in (0, 2], got {alpha}")
    return CriticalExponents(alpha, 2 - alpha / 4, 4 / 3, 4 / 5, (3 * alpha - 4) / 4)


# ---------------------------------------------------------------- GN


def gn_exponents(alpha):
    """Powers of ``||f||_2``, ``||f||_{H_x^{alpha/2}}`` and ``||d_x^{-1} f_y||_2``."""
    return (5 * alpha - 4) / (alpha + 2), (18 - 5 * alpha) / (2 * (alpha + 2)), 0.5


def gn_ratio(f: Field, alpha) -> float:
    """``||f||_3^3`` over the product of norms on the right of the cubic estimate."""
    if not 0 < alpha <= 2:
        raise PreconditionError(f"alpha must lie in (0, 2], got {alpha}")
    if not 0.8 <= alpha < 1:
        log.warning("alpha=%g lies outside [4/5, 1)", alpha)
    v = f.values
    lhs = f.grid.cell_area * np.sum(np.abs(v) ** 3)
    l2 = norm_l2(f)
    h = math.hypot(l2, norm_l2(frac_deriv_x(f, alpha / 2)))
    t = norm_l2(antideriv_x_deriv_y(f))
    if l2 == 0 or t == 0:
        raise PreconditionError("right-hand side vanishes (need f != 0 with nonzero d_x^-1 f_y)")
    p1, p2, p3 = gn_exponents(alpha)
    return float(lhs / (l2**p1 * h**p2 * t**p3))


def dilate(f: Field, a, b) -> Field:
    """``f(a x, b y)``: the same samples on the box ``[0, lx/a) x [0, ly/b)``."""
    g = f.grid
    return Field(Grid2D(g.nx, g.ny, g.lx / a, g.ly / b), f.values, "real")


def gn_dilation_scan(f: Field, alpha, exponents=range(-3, 4)):
    """Ratios over ``a, b = 2^k``; rows ``(a, b, ratio)``."""
    rows = []
    for i in exponents:
        for j in exponents:
            a, b = 2.0**i, 2.0**j
            rows.append((a, b, gn_ratio(dilate(f, a, b), alpha)))
    return rows


# ---------------------------------------------------------------- J(lambda)


def _cos_taper(x, R):
    out = np.ones_like(x)
    edge = x > 0.5 * R
    out[edge] = 0.5 * (1.0 + np.cos(np.pi * (x[edge] - 0.5 * R) / (0.5 * R)))
    return out


def _phase_slope_bound(alpha, family, lam_max, a, b):
    if family is None:
        return lam_max + (alpha + 1) * b**alpha
    h = 1e-6 * max(b, 1.0)
    ws = []
    for x in (a, b):
        x = max(x, h)
        ws.append(abs(eval_w(family, x + h) - eval_w(family, max(x - h, 0.0))) / (x + h - max(x - h, 0.0)))
    return lam_max + 1.5 * max(ws)


def _panels(alpha, R, lam_max, family, max_panels):
    """Edges on ``[0, R]`` with width at most ``2 pi / (5 |phase'|)`` on each panel."""
    edges = [0.0]
    x = 0.0
    while x < R:
        h = min(R - x, 1.0)
        # shrink until the slope bound at the panel end is respected
        while True:
            bound = _phase_slope_bound(alpha, family, lam_max, x, x + h)
            hmax = 2 * np.pi / (5 * bound)
            if h <= hmax:
                break
            h = hmax
        x = min(R, x + h)
        edges.append(x)
        if len(edges) > max_panels:
            return np.asarray(edges), True
    return np.asarray(edges), False


@dataclass
class _Nodes:
    xi: np.ndarray
    weight: np.ndarray  # quadrature weight times amplitude, taper and window
    flagged: bool
    n_panels: int


def _node_set(alpha, R, lam_max, family=None, window=None, nodes=8, max_panels=4_000_000):
    if not R > 1:
        raise PreconditionError("R must exceed 1")
    if not 0 < alpha <= 2:
        raise PreconditionError(f"alpha must lie in (0, 2], got {alpha}")
    edges, flagged = _panels(alpha, R, lam_max, family, max_panels)
    if flagged:
        log.warning("panel budget %d exceeded; value truncated at xi=%g", max_panels, edges[-1])
    p = (alpha - 1) / 2
    # first panel: Gauss-Jacobi absorbs the |xi|^p factor at the origin
    x0, w0 = jacobi_left(0.0, edges[1], nodes, p)
    a, b = edges[1:-1, None], edges[2:, None]
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    h = 0.5 * (b - a)
    x1 = (0.5 * (a + b) + h * xg).ravel()
    w1 = (h * wg).ravel() * x1**p
    xi = np.concatenate([x0, x1])
    w = np.concatenate([w0, w1]) * _cos_taper(xi, R)
    if window is not None:
        w = w * window(xi)
    return _Nodes(xi, w, flagged, len(edges) - 1)


def _phase(alpha, family, xi):
    return xi ** (alpha + 1) if family is None else eval_w(family, xi)


def _half_integrals(lams, alpha, nd: _Nodes, family, sign=1):
    """``int_0^R`` of the positive (``sign=1``) or mirrored negative (``sign=-1``) half."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    base = nd.weight * np.exp(sign * 1j * (np.pi / 4 + _phase(alpha, family, nd.xi)))
    out = np.empty(lams.size, dtype=complex)
    chunk = max(1, 2_000_000 // max(nd.xi.size, 1))
    for i in range(0, lams.size, chunk):
        L = lams[i:i + chunk, None]
        out[i:i + chunk] = np.exp(sign * 1j * L * nd.xi[None, :]) @ base
    return out


@dataclass
class DecayValue:
    value: complex
    plus: complex
    minus: complex
    flagged: bool
    n_panels: int


def decay_J(lam, alpha, R, family: Optional[SymbolFamily] = None, nodes=8, max_panels=4_000_000) -> DecayValue:
    """``int |xi|^((alpha-1)/2) e^{i sgn(xi) pi/4} e^{i lam xi} e^{i xi |xi|^alpha} dxi`` over ``|xi| <= R``.

    A cosine taper on ``R/2 <= |xi| <= R`` smooths the truncation.  ``plus``
    and ``minus`` are the two half-line contributions; the second is
    integrated with its own mirrored integrand, so ``minus == conj(plus)``
    is a genuine check.  ``family`` swaps ``xi |xi|^alpha`` for another odd symbol.
    """
    nd = _node_set(alpha, R, abs(lam), family, nodes=nodes, max_panels=max_panels)
    plus = _half_integrals([lam], alpha, nd, family, 1)[0]
    # negative half: xi = -r gives |xi|^p e^{-i pi/4} e^{-i lam r} e^{-i w(r)}
    minus = _half_integrals([lam], alpha, nd, family, -1)[0]
    return DecayValue(complex(plus + minus), complex(plus), complex(minus), nd.flagged, nd.n_panels)


@dataclass
class DecayScan:
    alpha: float
    lambdas: np.ndarray
    J: np.ndarray
    J_double: np.ndarray
    R: float
    sup: float
    r_change: float
    edge_flag: bool
    flagged: bool

    def rows(self):
        flag = int(self.flagged or self.edge_flag or self.r_change >= 0.05)
        return [(float(l), float(j.real), float(j.imag), float(abs(j)), self.R, flag)
                for l, j in zip(self.lambdas, self.J_double)]


def stationary_radius(lam, alpha):
    """Where ``lam + (alpha+1) xi^alpha`` vanishes (``lam < 0``)."""
    return (abs(lam) / (alpha + 1)) ** (1 / alpha)


def suggested_R(lambdas, alpha, floor=40.0):
    """Twice the largest stationary point, so the taper never reaches it."""
    lam_min = min(0.0, float(np.min(lambdas)))
    return max(floor, 2.5 * stationary_radius(lam_min, alpha))


def _real_J(lambdas, alpha, R, family, window=None, nodes=8):
    nd = _node_set(alpha, R, float(np.max(np.abs(lambdas))), family, window=window, nodes=nodes)
    # the two halves are conjugate, so J = 2 Re(plus)
    return 2.0 * _half_integrals(lambdas, alpha, nd, family, 1).real.astype(complex), nd.flagged


def decay_scan(alpha, lambdas: Sequence[float], R: Optional[float] = None,
               family: Optional[SymbolFamily] = None) -> DecayScan:
    """``J`` over a ``lambda`` grid at ``R`` and ``2R`` with the sup and the relative change."""
    if not 0 < alpha <= 2:
        raise PreconditionError(f"alpha must lie in (0, 2], got {alpha}")
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size < 3:
        raise PreconditionError("need at least three lambda values")
    R = R if R is not None else suggested_R(lambdas, alpha)
    J1, f1 = _real_J(lambdas, alpha, R, family)
    J2, f2 = _real_J(lambdas, alpha, 2 * R, family)
    sup = float(np.max(np.abs(J2)))
    change = float(np.max(np.abs(J1 - J2))) / max(sup, 1e-300)
    order = np.argsort(lambdas)
    mag = np.abs(J2[order])
    interior = mag[2:-2] if mag.size > 6 else mag
    edge = np.concatenate([mag[:2], mag[-2:]])
    edge_flag = bool(np.max(edge) > 1.5 * np.max(interior))
    return DecayScan(alpha, lambdas, J1, J2, R, sup, change, edge_flag, f1 or f2)


def windowed_J(lambdas, alpha, r, width=None, R=None):
    """``J`` with the amplitude localized near ``|xi| = r`` by a Gaussian bump.

    For ``lambda < 0`` the phase is stationary at ``r`` when
    ``lambda = -(alpha+1) r^alpha``, so ``|J|`` peaks there.
    """
    width = width or r / 4
    R = R or 2 * (r + 8 * width)
    lambdas = np.asarray(lambdas, dtype=float)
    J, _ = _real_J(lambdas, alpha, R, None, window=lambda x: np.exp(-(((x - r) / width) ** 2)))
    return J


# ---------------------------------------------------------------- embedding


def embedding_ratio(u: Field, s) -> float:
    """``||d_x u||_inf / ||u||_{X^s}`` for ``s > 4``."""
    if not s > 4:
        raise PreconditionError(f"the embedding needs s > 4, got {s}")
    den = norm_xs(u, s)
    if den == 0:
        raise PreconditionError("u must be nonzero")
    return float(norm_linf(deriv_x(u)) / den)


def embedding_bound(grid: Grid2D, s) -> float:
    """Cauchy-Schwarz constant ``C`` with ``||d_x u||_inf <= C ||u||_{X^s}`` for every field on ``grid``.

    ``C^2 = sum_{xi != 0} xi^2 / ((1+xi^2)^s + eta^2/xi^2) / (lx ly)``; the
    lattice sum stays bounded as the grid grows exactly when ``s > 4``.
    """
    if not s > 4:
        raise PreconditionError(f"the embedding needs s > 4, got {s}")
    XI, ETA = grid.wavenumbers()
    nz = XI != 0
    m = (1 + XI[nz] ** 2) ** s + (ETA[nz] / XI[nz]) ** 2
    return float(math.sqrt(np.sum(XI[nz] ** 2 / m) / (grid.lx * grid.ly)))


def band_limited_field(grid: Grid2D, rng: np.random.Generator, max_mode=16) -> Field:
    """Real random field with modes ``|j|, |k| <= max_mode``."""
    c = np.zeros(grid.shape, dtype=complex)
    jx = np.abs(grid.mode_x)[:, None] <= max_mode
    jy = np.abs(grid.mode_y)[None, :] <= max_mode
    mask = jx & jy
    c[mask] = rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(mask.sum())
    v = np.fft.ifft2(c).real
    return Field(grid, v, "real")


def embedding_ensemble(s, n_draws=100, seed=0, grid: Optional[Grid2D] = None, max_mode=16):
    grid = grid or Grid2D(64, 64, 2 * np.pi, 2 * np.pi)
    rng = np.random.default_rng(seed)
    ratios = np.array([embedding_ratio(band_limited_field(grid, rng, max_mode), s) for _ in range(n_draws)])
    return ratios, embedding_bound(grid, s)
