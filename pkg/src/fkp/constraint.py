"""Free evolution off the lattice and the zero x-mass constraint.

The free solution is evaluated directly from its Fourier representation

    u(x, y, t) = (2 pi)^-2  int int exp(i t omega(xi, eta)) phi_hat(xi, eta) exp(i (x xi + y eta)) d eta d xi

with ``omega = w(xi) - kappa eta^2 / xi``.  The ``eta`` integral is done in
closed form for Gaussian data and by tapered panel quadrature otherwise.  The
``xi`` integral runs over ``eps <= |xi| <= xi_max`` on Gauss-Legendre panels
that are graded geometrically towards the excluded band.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import PreconditionError
from .quadrature import panel_rule
from .spectral import Field, inverse_xi_multiplier, spectral_l2, zero_line_energy
from .symbols import KPSymbol, eval_w

log = logging.getLogger(__name__)

COSINE = "cosine"
GAUSSIAN = "gaussian"

_CHUNK = 128


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretization of the Fourier inversion.

    ``xi_min_exclusion`` is the half-width of the band removed around
    ``xi = 0``; ``n_xi`` and ``n_eta`` count panels of ``nodes`` points on
    ``(0, xi_max]`` and ``[-eta_max, eta_max]``.  The ``x`` integration of the
    mass uses panels of width ``x_panel`` out to ``x_far`` and ``x_panel_far``
    beyond.  ``tol`` bounds the relative change under refinement.
    """

    xi_min_exclusion: float = 1e-6
    xi_max: float = 30.0
    eta_max: float = 30.0
    n_xi: int = 2048
    n_eta: int = 2048
    taper: str = COSINE
    nodes: int = 8
    x_panel: float = 0.5
    x_panel_far: float = 2.0
    x_far: float = 50.0
    tol: float = 1e-3

    def __post_init__(self):
        if not 0 < self.xi_min_exclusion < self.xi_max:
            raise PreconditionError("need 0 < xi_min_exclusion < xi_max")
        if not self.eta_max > 0:
            raise PreconditionError("eta_max must be positive")
        if self.n_xi < 64 or self.n_eta < 64:
            raise PreconditionError("panel counts must be at least 64")
        if self.taper not in (COSINE, GAUSSIAN):
            raise PreconditionError(f"unknown taper {self.taper!r}")
        if min(self.x_panel, self.x_panel_far) <= 0:
            raise PreconditionError("x panel widths must be positive")

    def refined(self):
        """Half the exclusion, twice the panels."""
        return replace(self, xi_min_exclusion=self.xi_min_exclusion / 2, n_xi=2 * self.n_xi,
                       n_eta=2 * self.n_eta, x_panel=self.x_panel / 2, x_panel_far=self.x_panel_far / 2)


def default_spec(sigma=1.0, **overrides) -> QuadratureSpec:
    """Defaults scaled to a datum of frequency width ``sigma``."""
    base = dict(xi_max=30.0 * sigma, eta_max=30.0 * sigma, x_panel=0.5 / sigma,
                x_panel_far=2.0 / sigma, x_far=50.0 / sigma)
    base.update(overrides)
    return QuadratureSpec(**base)


def _taper(a, amax, kind):
    start = 0.9 * amax
    out = np.ones_like(a)
    edge = a > start
    s = (a[edge] - start) / (amax - start)
    if kind == COSINE:
        out[edge] = 0.5 * (1.0 + np.cos(np.pi * s))
    else:
        out[edge] = np.exp(-0.5 * (3.0 * s) ** 2)
    return out


@dataclass(frozen=True)
class GaussianDatum:
    """``phi_hat = A exp(-(xi^2 + eta^2) / (2 sigma^2))``, times ``i xi / sigma`` if ``odd_x``.

    The plain datum is ``A sigma^2/(2 pi) exp(-sigma^2 (x^2+y^2)/2)``; the odd
    one is its ``x``-derivative divided by ``sigma``.
    """

    amplitude: float = 1.0
    sigma: float = 1.0
    odd_x: bool = False

    def __post_init__(self):
        if not self.sigma > 0:
            raise PreconditionError("sigma must be positive")

    def hat(self, xi, eta):
        s2 = self.sigma**2
        out = self.amplitude * np.exp(-(xi**2 + eta**2) / (2 * s2))
        return out * (1j * xi / self.sigma) if self.odd_x else out

    def value(self, x, y):
        s = self.sigma
        g = self.amplitude * s * s / (2 * np.pi) * np.exp(-0.5 * s * s * (x**2 + y**2))
        return -s * x * g if self.odd_x else g

    def x_mass(self, y):
        """``int phi(x, y) dx``."""
        if self.odd_x:
            return 0.0 * np.asarray(y)
        s = self.sigma
        return self.amplitude * s / math.sqrt(2 * np.pi) * np.exp(-0.5 * s * s * np.asarray(y) ** 2)

    def eta_integral(self, xi, y, t, kappa):
        """``int phi_hat(xi, eta) exp(-i t kappa eta^2/xi + i y eta) d eta`` in closed form."""
        a = 1.0 / (2 * self.sigma**2) + 1j * kappa * t / xi
        val = np.sqrt(np.pi / a) * np.exp(-(y**2) / (4 * a))
        return self.hat(xi, 0.0) * val


def _eta_integral_numeric(datum, xi, y, t, kappa, q: QuadratureSpec):
    eta, w = panel_rule(np.linspace(-q.eta_max, q.eta_max, q.n_eta + 1), q.nodes)
    w = w * _taper(np.abs(eta), q.eta_max, q.taper)
    out = np.empty(xi.shape, dtype=complex)
    for i in range(0, xi.size, _CHUNK):
        x = xi[i:i + _CHUNK, None]
        f = datum.hat(x, eta[None, :]) * np.exp(1j * (-kappa * t * eta[None, :] ** 2 / x + y * eta[None, :]))
        out[i:i + _CHUNK] = f @ w
    return out


def _xi_rule(q: QuadratureSpec):
    """Positive-half nodes and weights (taper included); the rule is mirrored at use."""
    h = q.xi_max / q.n_xi
    eps = q.xi_min_exclusion
    if eps < h:
        n_geo = max(1, int(math.ceil(math.log2(h / eps))))
        inner = np.geomspace(eps, h, n_geo + 1)
        edges = np.concatenate([inner, np.linspace(h, q.xi_max, q.n_xi)[1:]])
    else:
        edges = np.linspace(eps, q.xi_max, q.n_xi + 1)
    xi, w = panel_rule(edges, q.nodes)
    return xi, w * _taper(xi, q.xi_max, q.taper)


def _spectral_profile(datum, s: KPSymbol, y, t, q: QuadratureSpec):
    """Nodes ``xi`` (both signs) and ``(2 pi)^-2 weight * exp(i t w) * eta-integral``."""
    xp, wp = _xi_rule(q)
    xi = np.concatenate([-xp[::-1], xp])
    w = np.concatenate([wp[::-1], wp])
    if hasattr(datum, "eta_integral"):
        eta_part = datum.eta_integral(xi, y, t, s.kappa)
    else:
        eta_part = _eta_integral_numeric(datum, xi, y, t, s.kappa, q)
    g = w * np.exp(1j * t * eval_w(s.family, xi)) * eta_part / (4 * np.pi**2)
    return xi, g


def _synthesize(xi, g, x):
    out = np.empty(x.shape, dtype=complex)
    for i in range(0, x.size, _CHUNK):
        out[i:i + _CHUNK] = np.exp(1j * np.outer(x[i:i + _CHUNK], xi)) @ g
    return out


def _evaluate(datum, s, pts, t, q):
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    out = np.empty(len(pts), dtype=complex)
    for y in np.unique(pts[:, 1]):
        sel = pts[:, 1] == y
        xi, g = _spectral_profile(datum, s, y, t, q)
        out[sel] = _synthesize(xi, g, pts[sel, 0])
    return out


@dataclass
class FreeSolution:
    values: np.ndarray
    change: float
    flagged: bool


def free_solution_at(datum, s: KPSymbol, pts, t: float, q: Optional[QuadratureSpec] = None) -> FreeSolution:
    """Free evolution of ``datum`` at the points ``pts = [(x, y), ...]``.

    ``change`` is the largest difference against a refined rule, relative
    to the largest value; ``flagged`` is set when it exceeds ``q.tol``.
    Complex values are returned so the imaginary round-off stays visible.
    """
    q = q or default_spec(getattr(datum, "sigma", 1.0))
    base = _evaluate(datum, s, pts, t, q)
    fine = _evaluate(datum, s, pts, t, q.refined())
    scale = max(float(np.max(np.abs(fine))), 1e-300)
    change = float(np.max(np.abs(fine - base))) / scale
    flagged = change > q.tol
    if flagged:
        log.warning("free solution refinement change %.3g exceeds tol %.3g", change, q.tol)
    return FreeSolution(fine, change, flagged)


def _x_edges(X_max, q: QuadratureSpec, X_list):
    near = min(q.x_far, X_max)
    edges = [np.linspace(0.0, near, max(1, int(math.ceil(near / q.x_panel))) + 1)]
    if X_max > near:
        n = max(1, int(math.ceil((X_max - near) / q.x_panel_far)))
        edges.append(np.linspace(near, X_max, n + 1)[1:])
    edges = np.concatenate(edges + [np.asarray(X_list, dtype=float)])
    return np.unique(edges)


def _mass_table(datum, s, y, t, X_list, q):
    X_list = np.asarray(X_list, dtype=float)
    edges = _x_edges(X_list[-1], q, X_list)
    x, w = panel_rule(edges, q.nodes)
    xi, g = _spectral_profile(datum, s, y, t, q)
    # u(x) + u(-x) integrated over [0, X] is the mass over [-X, X]
    vals = _synthesize(xi, g, np.concatenate([x, -x]))
    n = x.size
    sym = (vals[:n] + vals[n:]) * w
    per_panel = sym.reshape(-1, q.nodes).sum(axis=1)
    cum = np.concatenate([[0.0], np.cumsum(per_panel)])
    idx = np.searchsorted(edges, X_list)
    return cum[idx]


@dataclass
class MassTable:
    X: np.ndarray
    mass: np.ndarray
    imag_residual: np.ndarray
    change: float
    flagged: bool

    def rows(self):
        flag = int(self.flagged)
        return [(float(X), float(m), float(r), flag) for X, m, r in zip(self.X, self.mass, self.imag_residual)]


def generalized_x_mass(datum, s: KPSymbol, y: float, t: float, X_list, q: Optional[QuadratureSpec] = None) -> MassTable:
    """``M(X) = int_{-X}^{X} u(x, y, t) dx`` for each ``X`` in the increasing list ``X_list``.

    The ``x`` integral is a composite Gauss rule over samples of the free
    solution.  The refinement change is measured against the largest
    ``|M|`` in the table.
    """
    X_list = np.asarray(X_list, dtype=float)
    if X_list.ndim != 1 or X_list.size == 0 or X_list[0] <= 0 or np.any(np.diff(X_list) <= 0):
        raise PreconditionError("X_list must be positive and strictly increasing")
    q = q or default_spec(getattr(datum, "sigma", 1.0))
    base = _mass_table(datum, s, y, t, X_list, q)
    fine = _mass_table(datum, s, y, t, X_list, q.refined())
    scale = max(float(np.max(np.abs(fine))), 1e-300)
    change = float(np.max(np.abs(fine - base))) / scale
    flagged = change > q.tol
    if flagged:
        log.warning("x-mass refinement change %.3g exceeds tol %.3g", change, q.tol)
    return MassTable(X_list, fine.real.copy(), fine.imag.copy(), change, flagged)


def x_mass_spectral(datum, s: KPSymbol, y: float, t: float, X, q: Optional[QuadratureSpec] = None):
    """``M(X)`` with the ``x`` integral done exactly: ``int_{-X}^{X} e^{i x xi} dx = 2 sin(X xi)/xi``.

    Independent of the sampled route in :func:`generalized_x_mass`; used as a cross-check.
    """
    q = q or default_spec(getattr(datum, "sigma", 1.0))
    xi, g = _spectral_profile(datum, s, y, t, q)
    X = np.atleast_1d(np.asarray(X, dtype=float))
    return np.array([np.sum(g * 2.0 * np.sin(Xv * xi) / xi) for Xv in X])


@dataclass
class DtCriterion:
    value: float
    zero_line_flag: bool


def dt_criterion(u0: Field, rel_tol=1e-12) -> DtCriterion:
    """``||(eta/xi) u0_hat||`` over ``xi != 0`` and whether the ``xi = 0`` column carries ``eta``-energy.

    The flag means the condition fails in the lattice sense: the transverse
    term cannot act on the ``xi = 0`` column.
    """
    value = spectral_l2(u0.grid, u0.coeffs, inverse_xi_multiplier(u0.grid) ** 2)
    total = spectral_l2(u0.grid, u0.coeffs, 1.0 + u0.grid.ky[None, :] ** 2) ** 2
    e0 = zero_line_energy(u0)
    return DtCriterion(value, bool(e0 > rel_tol * max(total, 1e-300)))
