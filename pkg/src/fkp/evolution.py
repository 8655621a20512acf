"""Time evolution of ``u_t + u u_x - L u + kappa d_x^{-1} u_yy = 0`` on a periodic box.

In Fourier variables the linear part is ``i omega(xi, eta)`` with
``omega = w(xi) - kappa eta^2 / xi``; it is integrated exactly and the
quadratic term ``-1/2 d_x (u^2)`` by classical RK4 in the interaction
picture (integrating-factor RK4).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from . import spectral as sp
from .errors import BlowUpError, CFLViolation, PreconditionError
from .spectral import SPECTRAL, Field, Grid2D
from .symbols import PURE_POWER, KPSymbol, eval_omega

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    symbol: KPSymbol
    dt: float
    t_end: float
    snapshot_every: int = 100
    dealias: bool = True
    diagnostics_every: int = 10
    xs_order: float = 2.0
    linear_only: bool = False

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise PreconditionError("dt must be positive")
        if not self.t_end >= self.dt:
            raise PreconditionError("t_end must be at least dt")
        if self.snapshot_every < 1 or self.diagnostics_every < 1:
            raise PreconditionError("output cadences must be positive integers")


@dataclass
class DiagnosticsSeries:
    times: List[float] = field(default_factory=list)
    mass: List[float] = field(default_factory=list)
    l2: List[float] = field(default_factory=list)
    hamiltonian: List[float] = field(default_factory=list)
    xs_norm: List[float] = field(default_factory=list)
    w1inf: List[float] = field(default_factory=list)

    COLUMNS = ("t", "mass", "l2", "hamiltonian", "xs", "w1inf")

    def append(self, t, u: Field, symbol: KPSymbol, xs_order):
        if self.times and not t > self.times[-1]:
            raise ValueError("diagnostic times must increase strictly")
        h = hamiltonian(u, symbol)
        self.times.append(float(t))
        self.mass.append(sp.integral(u))
        self.l2.append(sp.norm_l2(u))
        self.hamiltonian.append(float("nan") if h is None else h)
        self.xs_norm.append(sp.norm_xs(u, xs_order))
        self.w1inf.append(sp.norm_w1inf_x(u))

    def as_arrays(self):
        return {name: np.asarray(getattr(self, name)) for name in
                ("times", "mass", "l2", "hamiltonian", "xs_norm", "w1inf")}

    def rows(self):
        return zip(self.times, self.mass, self.l2, self.hamiltonian, self.xs_norm, self.w1inf)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(self.COLUMNS) + "\n")
            for row in self.rows():
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    def relative_drift(self, name):
        """``max_t |q(t) - q(0)| / |q(0)|`` for a diagnostic column."""
        q = np.asarray(getattr(self, name))
        return float(np.max(np.abs(q - q[0])) / abs(q[0]))


def omega_lattice(grid: Grid2D, symbol: KPSymbol) -> np.ndarray:
    XI, ETA = grid.wavenumbers()
    return eval_omega(symbol, XI, ETA)


def project_invariant(u: Field) -> Tuple[Field, float]:
    """Drop the ``(xi = 0, eta != 0)`` modes and the x-Nyquist row.

    This is the subspace on which the discrete group is unitary and real.
    Returns the projected field and the discarded ``||d_y P_0 u||^2``.
    """
    c = np.array(u.coeffs)
    discarded = sp.zero_line_energy(u)
    c[0, 1:] = 0.0
    c[u.grid.nx // 2, :] = 0.0
    sp.zero_mode_log.record(discarded)
    return Field(u.grid, c, SPECTRAL), discarded


def linear_propagate(u0: Field, symbol: KPSymbol, t: float) -> Field:
    """Exact free evolution: multiply by ``exp(i t omega)`` on the invariant subspace."""
    v, _ = project_invariant(u0)
    phase = np.exp(1j * t * omega_lattice(u0.grid, symbol))
    return Field(u0.grid, v.coeffs * phase, SPECTRAL)


class _IFRK4:
    """Precomputed factors for one (grid, symbol, dt, dealias) combination."""

    def __init__(self, grid: Grid2D, symbol: KPSymbol, dt: float, dealias: bool, nonlinear: bool):
        self.grid = grid
        self.dt = dt
        self.nonlinear = nonlinear
        omega = omega_lattice(grid, symbol)
        self.e_half = np.exp(0.5j * dt * omega)
        self.e_full = self.e_half**2
        XI, _ = grid.wavenumbers()
        deriv = -0.5j * XI
        deriv[grid.nx // 2, :] = 0.0
        if dealias:
            deriv = deriv * sp.dealias_mask(grid)
        self.nl_factor = deriv
        self.n = grid.nx * grid.ny
        self.max_xi = float(np.max(np.abs(grid.xi)))
        max_omega = float(np.max(np.abs(omega)))
        if max_omega > 0 and abs(dt) > 2.8 / max_omega:
            log.info("dt=%g exceeds the advisory bound 2.8/max|omega|=%g", dt, 2.8 / max_omega)

    def nonlin(self, c):
        u = np.real(np.fft.ifft2(c)) * self.n
        umax = float(np.max(np.abs(u)))
        if not math.isfinite(umax):
            raise FloatingPointError
        if umax * self.max_xi * abs(self.dt) > 1.0:
            raise CFLViolation(
                f"max|u| * max|xi| * dt = {umax * self.max_xi * abs(self.dt):.3g} > 1", time=None)
        return self.nl_factor * (np.fft.fft2(u * u) / self.n)

    def step(self, c):
        if not self.nonlinear:
            return self.e_full * c
        dt, E, E2 = self.dt, self.e_half, self.e_full
        k1 = self.nonlin(c)
        k2 = self.nonlin(E * (c + 0.5 * dt * k1))
        k3 = self.nonlin(E * c + 0.5 * dt * k2)
        k4 = self.nonlin(E2 * c + dt * E * k3)
        return E2 * c + dt / 6.0 * (E2 * k1 + 2.0 * E * (k2 + k3) + k4)


@lru_cache(maxsize=16)
def _stepper(grid, symbol, dt, dealias, nonlinear):
    return _IFRK4(grid, symbol, dt, dealias, nonlinear)


def _project_coeffs(c, grid):
    c[0, 1:] = 0.0
    c[grid.nx // 2, :] = 0.0
    return c


def step_ifrk4(u: Field, cfg: SolverConfig, dt: Optional[float] = None) -> Field:
    """Advance ``u`` by one step (``cfg.dt`` unless ``dt`` is given; may be negative)."""
    dt = cfg.dt if dt is None else dt
    v, _ = project_invariant(u)
    stepper = _stepper(u.grid, cfg.symbol, float(dt), cfg.dealias, not cfg.linear_only)
    try:
        c = stepper.step(np.array(v.coeffs))
    except FloatingPointError:
        raise BlowUpError("non-finite values in the nonlinear term", time=None) from None
    if not np.all(np.isfinite(c)):
        raise BlowUpError("non-finite spectral coefficients", time=None)
    return Field(u.grid, _project_coeffs(c, u.grid), SPECTRAL)


def run(u0: Field, cfg: SolverConfig):
    """Integrate to ``cfg.t_end``.

    Returns ``(snapshots, diagnostics)`` where ``snapshots`` is a list of
    ``(t, Field)``.  The step is shortened uniformly if ``t_end / dt`` is not
    an integer.  On blow-up a :class:`BlowUpError` carrying the partial
    outputs is raised.
    """
    nsteps = max(1, math.ceil(cfg.t_end / cfg.dt - 1e-9))
    dt = cfg.t_end / nsteps
    if dt != cfg.dt:
        log.info("using dt=%.17g to land on t_end", dt)
    grid = u0.grid
    stepper = _stepper(grid, cfg.symbol, dt, cfg.dealias, not cfg.linear_only)
    u, _ = project_invariant(u0)
    c = np.array(u.coeffs)
    snapshots = [(0.0, u)]
    diags = DiagnosticsSeries()
    diags.append(0.0, u, cfg.symbol, cfg.xs_order)
    t = 0.0
    for n in range(1, nsteps + 1):
        try:
            c = stepper.step(c)
            if not np.all(np.isfinite(c)):
                raise FloatingPointError
        except FloatingPointError:
            raise BlowUpError(f"blow-up detected at t={t:.6g}", time=t,
                              snapshots=snapshots, diagnostics=diags) from None
        except CFLViolation as exc:
            raise CFLViolation(f"{exc} at t={t:.6g}", time=t,
                               snapshots=snapshots, diagnostics=diags) from None
        c = _project_coeffs(c, grid)
        t = n * dt
        if n % cfg.snapshot_every == 0 or n == nsteps or n % cfg.diagnostics_every == 0:
            u = Field(grid, c, SPECTRAL)
            if n % cfg.snapshot_every == 0 or n == nsteps:
                snapshots.append((t, u))
            if n % cfg.diagnostics_every == 0 or n == nsteps:
                diags.append(t, u, cfg.symbol, cfg.xs_order)
    return snapshots, diags


def hamiltonian(u: Field, symbol: KPSymbol) -> Optional[float]:
    """``1/2 ||D_x^(a/2) u||^2 - kappa/2 ||d_x^{-1} u_y||^2 - 1/6 int u^3``.

    Only defined for pure power symbols; returns ``None`` otherwise.
    """
    if symbol.family.kind != PURE_POWER:
        return None
    alpha = symbol.family.alpha
    disp = sp.norm_l2(sp.frac_deriv_x(u, alpha / 2.0)) ** 2
    transverse = sp.norm_l2(sp.antideriv_x_deriv_y(u)) ** 2
    return 0.5 * disp - 0.5 * symbol.kappa * transverse - sp.cubic_integral(u) / 6.0


def scaling_transform(u: Field, lam: float, alpha: float) -> Field:
    """``lam^alpha u(lam x, lam^((alpha+2)/2) y)`` at ``t = 0``.

    The sample points of the rescaled box map exactly onto the old ones, so
    this is a relabeling of lengths plus an amplitude factor.
    """
    if not (math.isfinite(lam) and lam > 0):
        raise PreconditionError(f"scaling parameter must be positive and finite, got {lam}")
    g = u.grid
    try:
        lx = g.lx / lam
        ly = g.ly / lam ** ((alpha + 2.0) / 2.0)
        amp = lam**alpha
    except OverflowError:
        raise PreconditionError(f"scaling by {lam} leaves the representable range") from None
    if not all(math.isfinite(v) and v > 0 for v in (lx, ly, amp)):
        raise PreconditionError(f"scaling by {lam} leaves the representable range")
    new = Grid2D(g.nx, g.ny, lx, ly)
    if u.space == SPECTRAL:
        return Field(new, amp * u.data, SPECTRAL)
    return Field(new, amp * u.data)


@dataclass
class ScalingReport:
    lam: float
    t: float
    discrepancy: float


def verify_scaling(u0: Field, cfg: SolverConfig, lam: float) -> ScalingReport:
    """Compare evolve-then-scale with scale-then-evolve (time ``t / lam^(alpha+1)``)."""
    if cfg.symbol.family.kind != PURE_POWER:
        raise PreconditionError("the scaling symmetry needs a pure power symbol")
    alpha = cfg.symbol.family.alpha
    quiet = dict(snapshot_every=10**9, diagnostics_every=10**9)
    snaps, _ = run(u0, replace(cfg, **quiet))
    ref = scaling_transform(snaps[-1][1], lam, alpha)
    tscale = lam ** (alpha + 1.0)
    cfg_s = replace(cfg, dt=cfg.dt / tscale, t_end=cfg.t_end / tscale, **quiet)
    snaps_s, _ = run(scaling_transform(u0, lam, alpha), cfg_s)
    got = snaps_s[-1][1]
    diff = sp.spectral_l2(ref.grid, ref.coeffs - got.coeffs)
    return ScalingReport(lam, cfg.t_end, diff / sp.norm_l2(ref))


def kdv_soliton(grid: Grid2D, c: float = 1.0, x0: Optional[float] = None, t: float = 0.0) -> Field:
    """``3c sech^2(sqrt(c)/2 (x - x0 - c t))`` (y independent), periodized."""
    x0 = grid.lx / 2 if x0 is None else x0

    def f(X, Y):
        s = X - x0 - c * t
        s = (s + grid.lx / 2) % grid.lx - grid.lx / 2
        return 3 * c / np.cosh(0.5 * np.sqrt(c) * s) ** 2 + 0 * Y

    return Field.from_function(grid, f)


def gaussian_bump(grid: Grid2D, amplitude=1.0, width=1.0) -> Field:
    """Centered Gaussian ``A exp(-r^2 / (2 width^2))``."""
    cx, cy = grid.lx / 2, grid.ly / 2
    return Field.from_function(
        grid, lambda X, Y: amplitude * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * width**2)))


def gaussian_dx(grid: Grid2D, amplitude=1.0, width=1.0) -> Field:
    """x-derivative profile of a Gaussian: smooth and with zero x-mean on every line."""
    cx, cy = grid.lx / 2, grid.ly / 2

    def f(X, Y):
        r2 = ((X - cx) ** 2 + (Y - cy) ** 2) / (2 * width**2)
        return -amplitude * (X - cx) / width * np.exp(-r2)

    return Field.from_function(grid, f)
