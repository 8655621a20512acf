"""Dispersion symbols ``w(xi)`` and the full KP symbol ``w(xi) - kappa eta^2 / xi``."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import PreconditionError

PURE_POWER = "pure_power"
ILW = "ilw"
WHITHAM_ST = "whitham_st"
TABLE = "table"
KINDS = (PURE_POWER, ILW, WHITHAM_ST, TABLE)

# below these arguments the closed forms are replaced by truncated series
_ILW_SERIES_CUT = 1e-3
_TANH_SERIES_CUT = 1e-3


@dataclass(frozen=True)
class SymbolFamily:
    """An odd dispersion symbol ``w``.

    ``alpha`` is the dispersion strength for ``pure_power`` (and the declared
    strength for ``table``); ``ilw`` and ``whitham_st`` fix it at 1 and 1/2.
    """

    kind: str = PURE_POWER
    alpha: float = 2.0
    delta_ilw: float = 1.0
    b_whitham: float = 1.0
    table: Optional[tuple] = None
    _interp: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown symbol kind {self.kind!r}")
        if self.kind == PURE_POWER and not (0.0 < self.alpha <= 2.0):
            raise PreconditionError(f"pure power symbols need alpha in (0, 2], got {self.alpha}")
        if self.kind == ILW and not self.delta_ilw > 0:
            raise PreconditionError("ILW depth must be positive")
        if self.kind == WHITHAM_ST and not self.b_whitham > 0:
            raise PreconditionError("surface tension coefficient must be positive")
        if self.kind == TABLE:
            if self.table is None:
                raise PreconditionError("table symbol needs (xi, w) samples")
            xs = np.asarray(self.table[0], dtype=float)
            ws = np.asarray(self.table[1], dtype=float)
            if xs.ndim != 1 or xs.shape != ws.shape or xs.size < 2:
                raise PreconditionError("table must be two equal-length 1D sequences")
            if xs[0] <= 0 or np.any(np.diff(xs) <= 0):
                raise PreconditionError("table xi samples must be positive and strictly increasing")
            # the origin is pinned so the odd extension is continuous
            interp = PchipInterpolator(np.concatenate([[0.0], xs]), np.concatenate([[0.0], ws]))
            object.__setattr__(self, "_interp", interp)

    @property
    def effective_alpha(self) -> float:
        if self.kind == ILW:
            return 1.0
        if self.kind == WHITHAM_ST:
            return 0.5
        return float(self.alpha)

    @classmethod
    def from_csv(cls, path, alpha=1.0):
        """Load a ``xi,w`` table (header optional, strictly increasing positive xi)."""
        xs, ws = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    x, w = float(row[0]), float(row[1])
                except ValueError:
                    continue  # header line
                xs.append(x)
                ws.append(w)
        return cls(kind=TABLE, alpha=alpha, table=(tuple(xs), tuple(ws)))


@dataclass(frozen=True)
class KPSymbol:
    family: SymbolFamily
    kappa: int = 1

    def __post_init__(self):
        if self.kappa not in (1, -1):
            raise PreconditionError(f"kappa must be +1 or -1, got {self.kappa}")

    @property
    def alpha(self):
        return self.family.effective_alpha


def pure_power(alpha, kappa=1) -> KPSymbol:
    return KPSymbol(SymbolFamily(PURE_POWER, alpha=alpha), kappa)


def _w_positive(f: SymbolFamily, a: np.ndarray) -> np.ndarray:
    """``w`` on ``a = |xi| >= 0``."""
    if f.kind == PURE_POWER:
        return a ** (f.alpha + 1.0)
    if f.kind == ILW:
        d = f.delta_ilw
        z = d * a
        out = np.empty_like(a)
        small = z < _ILW_SERIES_CUT
        zs = z[small]
        out[small] = a[small] / d * (1.0 + zs**2 / 3.0 - zs**4 / 45.0)
        big = ~small
        out[big] = a[big] ** 2 / np.tanh(z[big])
        return out
    if f.kind == WHITHAM_ST:
        small = a < _TANH_SERIES_CUT
        ratio = np.empty_like(a)
        s = a[small]
        ratio[small] = 1.0 - s**2 / 3.0 + 2.0 * s**4 / 15.0
        ratio[~small] = np.tanh(a[~small]) / a[~small]
        return np.sqrt(ratio) * np.sqrt(1.0 + f.b_whitham * a**2) * a
    return f._interp(a)


def eval_w(f: SymbolFamily, xi):
    """Evaluate the odd symbol ``w(xi)``; oddness holds exactly by construction."""
    xi = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(xi)):
        raise PreconditionError("xi must be finite")
    a = np.abs(xi)
    out = np.sign(xi) * _w_positive(f, np.atleast_1d(a)).reshape(a.shape)
    return out if out.ndim else float(out)


def eval_omega(s: KPSymbol, xi, eta):
    """``w(xi) - kappa eta^2 / xi`` for ``xi != 0`` and ``0`` on ``xi = 0``."""
    xi, eta = np.broadcast_arrays(np.asarray(xi, dtype=float), np.asarray(eta, dtype=float))
    w = np.asarray(eval_w(s.family, xi))
    out = np.zeros(xi.shape)
    nz = xi != 0
    out[nz] = w[nz] - s.kappa * eta[nz] ** 2 / xi[nz]
    return out if out.ndim else float(out)


def _closed_form_derivatives(f: SymbolFamily, a):
    if f.kind == PURE_POWER:
        p = f.alpha + 1.0
        return a**p, p * a ** (p - 1.0), p * (p - 1.0) * a ** (p - 2.0)
    return None


def _fd_derivatives(f: SymbolFamily, a):
    h = a * 1e-5
    wp = eval_w(f, a + h)
    wm = eval_w(f, a - h)
    w0 = eval_w(f, a)
    return w0, (wp - wm) / (2 * h), (wp - 2 * w0 + wm) / h**2


@dataclass
class HypothesisReport:
    low_freq_sup: float
    ratio_min: tuple
    ratio_max: tuple
    band: tuple
    passed: bool

    def lines(self):
        out = [f"sup_low={self.low_freq_sup:.6g}"]
        for beta in range(3):
            out.append(f"beta={beta} ratio_min={self.ratio_min[beta]:.6g} ratio_max={self.ratio_max[beta]:.6g}")
        out.append(f"band=[{self.band[0]}, {self.band[1]}] passed={self.passed}")
        return out


def validate_hypotheses(f: SymbolFamily, alpha: float, xi0: float, band=(0.3, 3.5), n=400) -> HypothesisReport:
    """Check ``|w| <~ 1`` on ``|xi| <= xi0`` and ``|w^(b)| ~ |xi|^(alpha+1-b)`` beyond.

    Derivative ratios are sampled on a log grid over ``[xi0, 1000 xi0]``;
    closed forms are used for pure powers, central differences otherwise.
    """
    if not xi0 > 0:
        raise PreconditionError("xi0 must be positive")
    low = np.logspace(np.log10(xi0) - 8, np.log10(xi0), n)
    sup_low = float(np.max(np.abs(eval_w(f, low))))
    a = np.logspace(np.log10(xi0), np.log10(xi0) + 3, n)
    derivs = _closed_form_derivatives(f, a) or _fd_derivatives(f, a)
    rmin, rmax = [], []
    for beta, d in enumerate(derivs):
        r = np.abs(d) / a ** (alpha + 1 - beta)
        rmin.append(float(r.min()))
        rmax.append(float(r.max()))
    lo, hi = band
    passed = all(lo <= m for m in rmin) and all(m <= hi for m in rmax)
    return HypothesisReport(sup_low, tuple(rmin), tuple(rmax), tuple(band), passed)
