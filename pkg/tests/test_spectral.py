import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fkp import spectral as sp
from fkp.errors import ConstraintViolation, PreconditionError
from fkp.spectral import Field, Grid2D, make_grid

TWO_PI = 2 * np.pi


def box(n=16):
    return make_grid(n, n, TWO_PI, TWO_PI)


def field(fn, n=16):
    return Field.from_function(box(n), fn)


def close(a, b, tol=1e-12):
    return np.allclose(a, b, rtol=tol, atol=tol)


# ---------------------------------------------------------------- grid


def test_integer_lattice_on_2pi_box():
    g = make_grid(8, 8, TWO_PI, TWO_PI)
    assert np.array_equal(g.xi, np.arange(-4, 4, dtype=float))


def test_half_integer_lattice():
    g = make_grid(8, 8, 4 * np.pi, TWO_PI)
    assert np.array_equal(g.xi, np.arange(-4, 4) * 0.5)


@pytest.mark.parametrize("args", [(7, 8, 1, 1), (8, 6, 1, 1), (8, 8, 0, 1), (8, 8, 1, -2), (8, 8, np.inf, 1)])
def test_grid_rejects_bad_sizes(args):
    with pytest.raises(PreconditionError):
        make_grid(*args)


def test_lattice_bit_reproducible():
    a, b = make_grid(64, 32, 3.7, 11.1), make_grid(64, 32, 3.7, 11.1)
    assert a.xi.tobytes() == b.xi.tobytes() and a.eta.tobytes() == b.eta.tobytes()
    assert np.array_equal(np.sort(a.kx), a.xi)


# ---------------------------------------------------------------- field


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (16, 8), elements=st.floats(-1e3, 1e3)))
def test_round_trip_identity(v):
    g = make_grid(16, 8, 3.0, 5.0)
    u = Field(g, v)
    back = u.to_spectral().to_real().values
    scale = max(np.max(np.abs(v)), 1e-300)
    assert np.max(np.abs(back - v)) <= 1e-12 * scale + 1e-300


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (16, 8), elements=st.floats(-1e3, 1e3)))
def test_parseval(v):
    g = make_grid(16, 8, 3.0, 5.0)
    u = Field(g, v)
    a = sp.norm_l2(u)
    b = sp.spectral_l2(g, u.coeffs)
    assert abs(a - b) <= 1e-12 * max(a, 1e-300)


def test_field_is_immutable_and_validated():
    u = field(lambda X, Y: np.cos(X))
    with pytest.raises(ValueError):
        u.data[0, 0] = 1.0
    with pytest.raises(PreconditionError):
        Field(box(), np.full((16, 16), np.nan))
    with pytest.raises(PreconditionError):
        Field(box(), np.zeros((8, 8)))


def test_spectral_coefficients_are_hermitian():
    rng = np.random.default_rng(1)
    u = Field(box(), rng.standard_normal((16, 16)))
    c = u.coeffs
    flipped = np.conj(np.roll(np.flip(c), 1, axis=(0, 1)))
    assert close(c, flipped, 1e-14)


# ---------------------------------------------------------------- multipliers


def test_frac_deriv_x_examples():
    assert close(sp.frac_deriv_x(field(lambda X, Y: np.cos(X)), 2).values, np.cos(box().coordinates()[0]))
    X, _ = box().coordinates()
    got = sp.frac_deriv_x(field(lambda X, Y: np.cos(2 * X)), 0.5).values
    assert close(got, np.sqrt(2) * np.cos(2 * X))
    assert close(sp.frac_deriv_x(field(lambda X, Y: 3.0 + 0 * X), 1).values, 0.0)


def test_frac_deriv_y_examples():
    _, Y = box().coordinates()
    assert close(sp.frac_deriv_y(field(lambda X, Y: np.sin(Y)), 2).values, np.sin(Y))
    assert close(sp.frac_deriv_y(field(lambda X, Y: np.sin(3 * Y)), 1).values, 3 * np.sin(3 * Y))
    assert close(sp.frac_deriv_y(field(lambda X, Y: np.cos(X) + 0 * Y), 0.5).values, 0.0)


def test_negative_order_needs_empty_zero_line():
    with pytest.raises(ConstraintViolation):
        sp.frac_deriv_x(field(lambda X, Y: np.cos(Y) + np.cos(X)), -1)
    # zero-mean in x is fine: D^-1 D^1 is the identity there
    u = field(lambda X, Y: np.sin(2 * X) * np.cos(Y))
    back = sp.frac_deriv_x(sp.frac_deriv_x(u, 1), -1)
    assert close(back.values, u.values)
    with pytest.raises(ConstraintViolation):
        sp.frac_deriv_y(field(lambda X, Y: np.cos(X) + 0 * Y), -0.5)


def test_antideriv_example_coefficients():
    u = field(lambda X, Y: np.sin(X) * np.cos(Y))
    got = sp.antideriv_x_deriv_y(u).coeffs
    g = u.grid
    XI, ETA = g.wavenumbers()
    expect = np.zeros_like(u.coeffs)
    nz = XI != 0
    expect[nz] = ETA[nz] / XI[nz] * u.coeffs[nz]
    assert close(got, expect, 1e-15)
    # (eta/xi) on the active modes (+-1, +-1): -cos(x) * -sin(y)... checked in real space too
    X, Y = g.coordinates()
    assert close(sp.antideriv_x_deriv_y(u).values, np.cos(X) * np.sin(Y))


def test_antideriv_discards_zero_line_and_counts_it():
    sp.zero_mode_log.reset()
    u = field(lambda X, Y: np.sin(2 * Y) + 0 * X)
    assert close(sp.antideriv_x_deriv_y(u).values, 0.0)
    # ||d_y g||^2 for g = sin 2y over the box: 4 * (2 pi)(pi)
    assert sp.zero_mode_log.count == 1
    assert sp.zero_mode_log.last_energy == pytest.approx(4 * TWO_PI * np.pi, rel=1e-12)
    assert close(sp.antideriv_x_deriv_y(field(lambda X, Y: np.sin(2 * X) + 0 * Y)).values, 0.0)


def test_bessel_examples():
    X, _ = box().coordinates()
    assert close(sp.bessel_x(field(lambda X, Y: 2.5 + 0 * X), 3.3).values, 2.5)
    assert close(sp.bessel_x(field(lambda X, Y: np.cos(X)), 2).values, 2 * np.cos(X))
    assert close(sp.bessel_x(field(lambda X, Y: np.cos(2 * X)), -2).values, np.cos(2 * X) / 5)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 3), st.floats(0, 3), st.integers(0, 2**32 - 1))
def test_multiplier_composition(a, b, seed):
    u = Field(box(), np.random.default_rng(seed).standard_normal((16, 16)))
    lhs = sp.frac_deriv_x(sp.frac_deriv_x(u, a), b).coeffs
    rhs = sp.frac_deriv_x(u, a + b).coeffs
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(np.max(np.abs(rhs)), 1e-300)


def test_antideriv_inverts_dx_on_zero_mean_fields():
    rng = np.random.default_rng(3)
    c = np.fft.fft2(rng.standard_normal((16, 16)))
    c[0, :] = 0
    u = Field(box(), np.fft.ifft2(c).real)
    lhs = sp.antideriv_x_deriv_y(sp.deriv_x(u)).coeffs
    rhs = np.array(sp.deriv_y(u).coeffs)
    # both sides drop the Nyquist lines of an odd multiplier
    rhs[8, :] = 0
    assert close(lhs, rhs, 1e-12)


def test_multipliers_commute_and_are_linear():
    rng = np.random.default_rng(4)
    u = Field(box(), rng.standard_normal((16, 16)))
    v = Field(box(), rng.standard_normal((16, 16)))
    ops = [lambda f: sp.frac_deriv_x(f, 0.7), lambda f: sp.frac_deriv_y(f, 1.3),
           lambda f: sp.bessel_x(f, -1.1), sp.deriv_x, sp.deriv_y, sp.antideriv_x_deriv_y, sp.dealias_23]
    for A in ops:
        assert close(A(2.0 * u + v).coeffs, (2.0 * A(u) + A(v)).coeffs, 1e-12)
        for B in ops:
            assert close(A(B(u)).coeffs, B(A(u)).coeffs, 1e-12)


def test_odd_multipliers_keep_output_real():
    rng = np.random.default_rng(5)
    u = Field(box(), rng.standard_normal((16, 16)))
    for op in (sp.deriv_x, sp.deriv_y, sp.antideriv_x_deriv_y):
        c = op(u).coeffs
        assert np.max(np.abs(np.fft.ifft2(c).imag)) < 1e-14


# ---------------------------------------------------------------- norms


def test_l2_of_unit():
    assert sp.norm_l2(field(lambda X, Y: 1.0 + 0 * X)) == pytest.approx(TWO_PI, rel=1e-14)


def test_linf_and_w1inf():
    u = field(lambda X, Y: np.sin(X) + 0 * Y)
    assert sp.norm_linf(u) == pytest.approx(1.0, abs=1e-12)
    assert sp.norm_w1inf_x(u) == pytest.approx(2.0, abs=1e-12)


def test_xs_examples():
    assert sp.norm_xs(field(lambda X, Y: -3.0 + 0 * X), 0) == pytest.approx(TWO_PI * 3, rel=1e-13)
    assert sp.norm_xs(field(lambda X, Y: np.sin(X) * np.sin(Y)), 0) == pytest.approx(np.pi * np.sqrt(2), rel=1e-13)
    assert sp.norm_xs(Field.zeros(box()), 1.5) == 0.0


def test_hs1s2_examples():
    u = field(lambda X, Y: np.cos(X) * np.cos(Y))
    assert sp.norm_hs1s2(u, 0, 0) == pytest.approx(sp.norm_l2(u), rel=1e-13)
    assert sp.norm_hs1s2(u, 2, 2) == pytest.approx(4 * sp.norm_l2(u), rel=1e-13)
    assert sp.norm_hs1s2(Field.zeros(box()), 1, 1) == 0.0


def test_integral_and_cubic():
    u = field(lambda X, Y: 2.0 + np.cos(X))
    assert sp.integral(u) == pytest.approx(2 * TWO_PI**2, rel=1e-13)
    # int (2 + cos)^3 = (8 + 3*2*1/2) (2 pi)^2
    assert sp.cubic_integral(u) == pytest.approx(11 * TWO_PI**2, rel=1e-13)


# ---------------------------------------------------------------- dealiasing


def test_dealias_cutoff_nx12():
    g = make_grid(12, 12, TWO_PI, TWO_PI)
    m = sp.dealias_mask(g)
    kept = sorted(set(int(j) for j in g.mode_x[m.any(axis=1)]))
    assert kept == list(range(-4, 5))


def test_dealias_keeps_band_limited_and_cuts_noise():
    u = field(lambda X, Y: np.cos(3 * X) * np.sin(2 * Y), n=12)
    assert close(sp.dealias_23(u).coeffs, u.coeffs, 1e-15)
    noise = Field(make_grid(12, 12, TWO_PI, TWO_PI), np.random.default_rng(6).standard_normal((12, 12)))
    assert sp.norm_l2(sp.dealias_23(noise).to_real()) < sp.norm_l2(noise)
