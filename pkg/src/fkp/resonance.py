"""Resonance function and the second Picard iterate on frequency rectangles.

For two inputs with frequencies ``a = (xi_a, eta_a)`` and ``b = (xi_b, eta_b)``
the quadratic term of the Duhamel expansion carries the kernel
``(exp(i t Omega) - 1) / Omega`` with the resonance function

    Omega = omega(a + b) - omega(a) - omega(b) = Gamma1 +/- Gamma2,

``Gamma1 = f(xi_a + xi_b) - f(xi_a) - f(xi_b)`` with ``f(x) = |x|^alpha x`` and
``Gamma2 = (eta_a xi_b - eta_b xi_a)^2 / ((xi_a + xi_b) xi_a xi_b)``; the plus
sign belongs to fKP-II, the minus sign to fKP-I.

Test data are indicator functions of axis-aligned rectangles in frequency
space.  All rectangle geometry is carried in local offsets from the lower-left
corners so that tiny rectangles sitting at huge frequencies keep full relative
precision.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import PreconditionError
from .quadrature import gauss_legendre, refine_edges

log = logging.getLogger(__name__)

FKP2 = "fkp2"
FKP1 = "fkp1"

# below this |t Omega| the kernel is evaluated by its Taylor series
KERNEL_SERIES_CUT = 1e-4


def gamma1(alpha, xi1, xi2):
    """``|xi1+xi2|^a (xi1+xi2) - |xi1|^a xi1 - |xi2|^a xi2``.

    When both frequencies share a sign and one is much smaller than the
    other, the leading difference is formed with ``expm1``/``log1p`` to keep
    relative accuracy; otherwise the formula is evaluated as written.
    """
    xi1, xi2 = np.broadcast_arrays(np.asarray(xi1, dtype=float), np.asarray(xi2, dtype=float))
    p = alpha + 1.0

    def f(x):
        return np.abs(x) ** alpha * x

    direct = f(xi1 + xi2) - f(xi1) - f(xi2)
    same = (xi1 * xi2) > 0
    big = np.maximum(np.abs(xi1), np.abs(xi2))
    small = np.minimum(np.abs(xi1), np.abs(xi2))
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = big**p * np.expm1(p * np.log1p(small / big))
        stable = np.sign(xi1) * (lead - small**p)
    lopsided = same & (small < 0.1 * big)
    out = np.where(lopsided, stable, direct)
    return out if out.ndim else float(out)


def gamma2(xi1, xi2, eta1, eta2):
    """``(eta1 xi2 - eta2 xi1)^2 / ((xi1 + xi2) xi1 xi2)``."""
    xi1, xi2, eta1, eta2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (xi1, xi2, eta1, eta2)))
    den = (xi1 + xi2) * xi1 * xi2
    if np.any(den == 0):
        raise PreconditionError("Gamma2 needs xi1, xi2 and xi1 + xi2 all nonzero")
    out = (eta1 * xi2 - eta2 * xi1) ** 2 / den
    return out if out.ndim else float(out)


def omega_res(variant, alpha, xi1, xi2, eta1, eta2):
    g1 = gamma1(alpha, xi1, xi2)
    g2 = gamma2(xi1, xi2, eta1, eta2)
    if variant == FKP2:
        return g1 + g2
    if variant == FKP1:
        return g1 - g2
    raise PreconditionError(f"unknown variant {variant!r}")


def duhamel_kernel(omega, t):
    """``(exp(i t omega) - 1) / omega``, continuous through ``omega = 0`` (value ``i t``)."""
    omega = np.asarray(omega, dtype=float)
    z = t * omega
    out = np.empty(omega.shape, dtype=complex)
    small = np.abs(z) < KERNEL_SERIES_CUT
    zs = z[small]
    out[small] = 1j * t * (1.0 + 0.5j * zs - zs**2 / 6.0 - 1j * zs**3 / 24.0)
    zb, ob = z[~small], omega[~small]
    # exp(iz) - 1 = -2 sin^2(z/2) + i sin z avoids cancellation for small z
    out[~small] = (-2.0 * np.sin(0.5 * zb) ** 2 + 1j * np.sin(zb)) / ob
    return out


@dataclass(frozen=True)
class Rect:
    """``[x0, x0 + wx] x [y0, y0 + wy]`` carrying constant amplitude ``amp``."""

    x0: float
    y0: float
    wx: float
    wy: float
    amp: float

    @property
    def bounds(self):
        return (self.x0, self.x0 + self.wx, self.y0, self.y0 + self.wy)


def _weighted_rect_norm(rect: Rect, s1, s2, n=32):
    # the weight is separable, so the 2D integral is a product of 1D ones
    u, wu = gauss_legendre(0.0, rect.wx, n)
    v, wv = gauss_legendre(0.0, rect.wy, n)
    ix = np.sum(wu * (1.0 + (rect.x0 + u) ** 2) ** s1)
    iy = np.sum(wv * (1.0 + (rect.y0 + v) ** 2) ** s2)
    return float(abs(rect.amp) * math.sqrt(ix * iy))


@dataclass(frozen=True)
class ResonanceTestData:
    variant: str
    alpha: float
    N: float
    theta: float
    gamma: float
    epsilon: Optional[float]
    s1: float
    s2: float
    rect1: Rect
    rect2: Rect
    norm1: float
    norm2: float


def build_test_data(variant, alpha, N, theta=0.01, s1=0.0, s2=0.0) -> ResonanceTestData:
    """Frequency-rectangle data that defeat the bilinear estimate.

    fKP-II: ``gamma = N^(-alpha-theta)``, ``eps = 1/2 + theta`` and
    ``rect1 = [g/2, g] x [g^eps, 2 g^eps]``, ``rect2 = [N, N+g] x [-g^eps, -g^eps/4]``.

    fKP-I: ``gamma = N^(-alpha/4-theta)``, ``rect1 = [g/2, g] x [-c g^2, c g^2]`` and
    ``rect2 = [N, N+g] x [c N^((alpha+2)/2), c N^((alpha+2)/2) + g^2]`` with
    ``c = sqrt(1+alpha)``.
    """
    if not N >= 10:
        raise PreconditionError(f"N must be at least 10, got {N}")
    if not 0 < theta <= 0.1:
        raise PreconditionError(f"theta must lie in (0, 0.1], got {theta}")
    if variant == FKP2:
        if not 0 < alpha <= 2:
            raise PreconditionError(f"alpha must lie in (0, 2], got {alpha}")
        gamma = N ** (-alpha - theta)
        eps = 0.5 + theta
        ge = gamma**eps
        amp = gamma ** (-0.5 - eps / 2)
        r1 = Rect(gamma / 2, ge, gamma / 2, ge, amp)
        r2 = Rect(N, -ge, gamma, 0.75 * ge, N ** (-s1) * amp)
    elif variant == FKP1:
        if not alpha > 0:
            raise PreconditionError(f"alpha must be positive, got {alpha}")
        if alpha > 2:
            log.warning("alpha=%g lies outside (0, 2]; no claim to compare against", alpha)
        eps = None
        gamma = N ** (-alpha / 4 - theta)
        c = math.sqrt(1 + alpha)
        amp = gamma**-1.5
        r1 = Rect(gamma / 2, -c * gamma**2, gamma / 2, 2 * c * gamma**2, amp)
        r2 = Rect(N, c * N ** ((alpha + 2) / 2), gamma, gamma**2,
                  amp * N ** (-s1 - (1 + alpha / 2) * s2))
    else:
        raise PreconditionError(f"unknown variant {variant!r}")
    return ResonanceTestData(variant, alpha, N, theta, gamma, eps, s1, s2, r1, r2,
                             _weighted_rect_norm(r1, s1, s2), _weighted_rect_norm(r2, s1, s2))


def predicted_exponent(variant, alpha):
    """Leading growth exponent of the Picard ratio in ``N`` (theta -> 0)."""
    return 1 - 0.75 * alpha if variant == FKP2 else 1 - 3 * alpha / 8


@dataclass
class BoundsReport:
    n_samples: int
    gamma1_ratio: tuple
    gamma2_ratio: Optional[tuple]
    omega_max: float
    gamma1_remainder_literal: Optional[float] = None
    gamma1_remainder: Optional[float] = None
    gamma2_remainder: Optional[float] = None


def _sample(rect, n, rng):
    return (rect.x0 + rect.wx * rng.random(n), rect.y0 + rect.wy * rng.random(n))


def resonance_bounds_check(data: ResonanceTestData, n_samples=10_000, seed=0) -> BoundsReport:
    """Monte Carlo magnitudes of ``Gamma1``, ``Gamma2`` and ``Omega`` on ``rect1 x rect2``.

    fKP-II ratios: ``|Gamma1| / (g N^a)`` and ``|Gamma2| / g^(2 eps - 1)``.
    fKP-I: remainders of ``Gamma1`` and ``Gamma2`` against ``(1+a) N^a xi_a``
    scaled by ``g^2 N^(a-1)`` and ``N^(a/2) g^2``; ``gamma1_remainder_literal``
    uses ``(1+a) N^a g`` as the reference instead of ``(1+a) N^a xi_a``.
    """
    rng = np.random.default_rng(seed)
    xa, ya = _sample(data.rect1, n_samples, rng)
    xb, yb = _sample(data.rect2, n_samples, rng)
    a, N, g = data.alpha, data.N, data.gamma
    g1 = gamma1(a, xa, xb)
    g2 = gamma2(xa, xb, ya, yb)
    om = g1 + g2 if data.variant == FKP2 else g1 - g2
    r1 = np.abs(g1) / (g * N**a)
    rep = BoundsReport(n_samples, (float(r1.min()), float(r1.max())), None, float(np.max(np.abs(om))))
    if data.variant == FKP2:
        r2 = np.abs(g2) / g ** (2 * data.epsilon - 1)
        rep.gamma2_ratio = (float(r2.min()), float(r2.max()))
    else:
        lead = (1 + a) * N**a
        s1 = g**2 * N ** (a - 1)
        s2 = N ** (a / 2) * g**2
        rep.gamma1_remainder_literal = float(np.max(np.abs(g1 - lead * g)) / s1)
        rep.gamma1_remainder = float(np.max(np.abs(g1 - lead * xa)) / s1)
        rep.gamma2_remainder = float(np.max(np.abs(g2 - lead * xa)) / s2)
    return rep


@dataclass
class PicardResult:
    N: float
    norm: float
    ratio: float
    omega_max: float
    converged: bool = True
    levels: int = 0


def _breakpoints(w1, w2):
    return np.unique([0.0, min(w1, w2), max(w1, w2), w1 + w2])


class _PicardIntegrand:
    """Evaluates the bilinear Fourier integral ``F`` at output offsets ``(p, q)``.

    ``p, q`` are offsets of the output frequency from ``corner(rect1) + corner(rect2)``.
    For each output point the integration set ``rect2 ∩ (out - rect1)`` is a
    rectangle, integrated by a tensor Gauss-Legendre rule.
    """

    def __init__(self, data: ResonanceTestData, t: float):
        self.d = data
        self.t = t
        self.omega_max = 0.0

    def __call__(self, p, q, m):
        d, r1, r2 = self.d, self.d.rect1, self.d.rect2
        p = np.asarray(p, dtype=float)[:, None]
        q = np.asarray(q, dtype=float)[None, :]
        ulo = np.maximum(0.0, p - r1.wx)
        uhi = np.minimum(r2.wx, p)
        vlo = np.maximum(0.0, q - r1.wy)
        vhi = np.minimum(r2.wy, q)
        su, wu = gauss_legendre(0.0, 1.0, m)
        hu = np.clip(uhi - ulo, 0.0, None)
        hv = np.clip(vhi - vlo, 0.0, None)
        # shapes: p-axis, q-axis, inner-u, inner-v
        u = ulo[:, :, None, None] + hu[:, :, None, None] * su[None, None, :, None]
        v = vlo[:, :, None, None] + hv[:, :, None, None] * su[None, None, None, :]
        u, v = np.broadcast_arrays(u, v)
        pp = np.broadcast_to(p[:, :, None, None], u.shape)
        qq = np.broadcast_to(q[:, :, None, None], u.shape)
        xb = r2.x0 + u
        yb = r2.y0 + v
        xa = r1.x0 + (pp - u)
        ya = r1.y0 + (qq - v)
        om = omega_res(d.variant, d.alpha, xa, xb, ya, yb)
        active = (hu[:, :, None, None] > 0) & (hv[:, :, None, None] > 0)
        if np.any(active):
            self.omega_max = max(self.omega_max, float(np.max(np.abs(om[np.broadcast_to(active, om.shape)]))))
        k = duhamel_kernel(om, self.t)
        inner = np.einsum("pqij,i,j->pq", k, wu, wu) * hu * hv
        xi_out = r1.x0 + r2.x0 + p
        return xi_out * r1.amp * r2.amp * inner


def picard_fourier(data: ResonanceTestData, t: float, xi, eta, m=16):
    """``F(xi, eta)`` at absolute output frequencies (zero off ``rect1 + rect2``).

    The ``exp(i t omega)`` prefactor is dropped.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    r1, r2 = data.rect1, data.rect2
    f = _PicardIntegrand(data, t)
    return f(xi - r1.x0 - r2.x0, eta - r1.y0 - r2.y0, m)


def _norm_at_level(f: _PicardIntegrand, data, level, n):
    r1, r2 = data.rect1, data.rect2
    pe = refine_edges(_breakpoints(r1.wx, r2.wx), 2**level)
    qe = refine_edges(_breakpoints(r1.wy, r2.wy), 2**level)
    m = n * 2**level
    total = 0.0
    qn, qw = [], []
    for a, b in zip(qe[:-1], qe[1:]):
        x, w = gauss_legendre(a, b, n)
        qn.append(x)
        qw.append(w)
    qn, qw = np.concatenate(qn), np.concatenate(qw)
    eta_out = r1.y0 + r2.y0 + qn
    wy = (1.0 + eta_out**2) ** data.s2
    for a, b in zip(pe[:-1], pe[1:]):
        pn, pw = gauss_legendre(a, b, n)
        F = f(pn, qn, m)
        xi_out = r1.x0 + r2.x0 + pn
        wx = (1.0 + xi_out**2) ** data.s1
        total += float(np.einsum("p,q,pq->", pw * wx, qw * wy, np.abs(F) ** 2))
    return math.sqrt(total)


def picard_second_norm(data: ResonanceTestData, t: float = 1.0, n=8, rtol=0.005, max_level=3) -> PicardResult:
    """``H^{s1,s2}`` norm of the bilinear Duhamel term for the rectangle data.

    Panels are split at the breakpoints of the rectangle convolution (where
    the integration set changes shape) and refined by halving until the norm
    changes by less than ``rtol``.
    """
    if not 0 < t <= 1:
        raise PreconditionError(f"t must lie in (0, 1], got {t}")
    f = _PicardIntegrand(data, t)
    prev = _norm_at_level(f, data, 0, n)
    converged = False
    level = 0
    for level in range(1, max_level + 1):
        cur = _norm_at_level(f, data, level, n)
        change = abs(cur - prev) / max(abs(cur), 1e-300)
        prev = cur
        if change < rtol:
            converged = True
            break
    if not converged:
        log.warning("Picard norm not converged for N=%g (last change above %g)", data.N, rtol)
    ratio = prev / (data.norm1 * data.norm2)
    return PicardResult(data.N, prev, ratio, f.omega_max, converged, level)


def growth_exponent_fit(results: Sequence[PicardResult]):
    """Least-squares slope of ``log(ratio)`` against ``log(N)`` and its ``r^2``."""
    Ns = np.array([r.N for r in results], dtype=float)
    if len(results) < 3 or len(np.unique(Ns)) < 3:
        raise PreconditionError("need at least three results with distinct N")
    x = np.log(Ns)
    y = np.log([r.ratio for r in results])
    slope, _ = np.polyfit(x, y, 1)
    r = np.corrcoef(x, y)[0, 1]
    return float(slope), float(r * r)


def scan(variant, alpha, Ns, theta=0.01, s1=0.0, s2=0.0, t=1.0):
    """Picard ratios over a ladder of ``N`` values."""
    return [picard_second_norm(build_test_data(variant, alpha, N, theta, s1, s2), t) for N in Ns]
