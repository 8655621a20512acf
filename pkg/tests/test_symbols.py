import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fkp.errors import PreconditionError
from fkp.symbols import (ILW, PURE_POWER, TABLE, WHITHAM_ST, KPSymbol, SymbolFamily, eval_omega, eval_w,
                         pure_power, validate_hypotheses)

FAMILIES = [
    SymbolFamily(PURE_POWER, alpha=0.5),
    SymbolFamily(PURE_POWER, alpha=2.0),
    SymbolFamily(ILW, delta_ilw=0.7),
    SymbolFamily(WHITHAM_ST, b_whitham=2.0),
    SymbolFamily(TABLE, alpha=1.0, table=((0.5, 1.0, 2.0, 4.0), (0.3, 1.1, 4.2, 16.5))),
]

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_pure_power_value():
    assert eval_w(SymbolFamily(PURE_POWER, alpha=2), 2.0) == 8.0


def test_ilw_vanishes_at_origin():
    assert eval_w(SymbolFamily(ILW, delta_ilw=1.0), 0.0) == 0.0


def test_ilw_deep_limit():
    w = eval_w(SymbolFamily(ILW, delta_ilw=50.0), 1.0)
    assert abs(w - 1.0) < 1e-6


@pytest.mark.parametrize("xi", [1e-9, 3e-5, 9.99e-4, 1.001e-3, 0.02, 0.7, 3.0])
@pytest.mark.parametrize("delta", [0.5, 1.0, 4.0])
def test_ilw_against_high_precision(xi, delta):
    mp.mp.dps = 40
    ref = float(mp.mpf(xi) ** 2 * mp.coth(mp.mpf(delta) * xi))
    got = eval_w(SymbolFamily(ILW, delta_ilw=delta), xi)
    assert got == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("xi", [1e-8, 5e-4, 9.99e-4, 1.001e-3, 0.3, 5.0])
def test_whitham_against_high_precision(xi):
    mp.mp.dps = 40
    b = 2.0
    x = mp.mpf(xi)
    ref = float(mp.sqrt(mp.tanh(x) / x) * mp.sqrt(1 + b * x**2) * x)
    assert eval_w(SymbolFamily(WHITHAM_ST, b_whitham=b), xi) == pytest.approx(ref, rel=1e-13)


@settings(max_examples=200, deadline=None)
@given(finite)
def test_oddness_is_exact(xi):
    for f in FAMILIES:
        assert eval_w(f, -xi) + eval_w(f, xi) == 0.0


@settings(max_examples=200, deadline=None)
@given(finite.filter(lambda v: abs(v) > 1e-6), finite, st.sampled_from([1, -1]))
def test_omega_antisymmetry(xi, eta, kappa):
    for f in FAMILIES:
        s = KPSymbol(f, kappa)
        assert eval_omega(s, -xi, -eta) == -eval_omega(s, xi, eta)


@settings(max_examples=200, deadline=None)
@given(finite.filter(lambda v: abs(v) > 1e-3), finite, st.sampled_from([0.5, 1.0, 4 / 3, 2.0]), st.sampled_from([1, -1]))
def test_pure_power_omega_formula(xi, eta, alpha, kappa):
    direct = abs(xi) ** alpha * xi - kappa * eta**2 / xi
    got = eval_omega(pure_power(alpha, kappa), xi, eta)
    assert got == pytest.approx(direct, rel=1e-14, abs=1e-300)


def test_omega_examples():
    assert eval_omega(pure_power(2, -1), 1.0, 1.0) == 2.0
    assert eval_omega(pure_power(1, 1), 2.0, 2.0) == 2.0
    for f in FAMILIES:
        assert eval_omega(KPSymbol(f, 1), 0.0, 3.0) == 0.0


def test_ilw_high_frequency_envelope():
    f = SymbolFamily(ILW, delta_ilw=1.3)
    xi = np.linspace(5 / 1.3, 30, 400)
    err = np.abs(eval_w(f, xi) - xi**2)
    # the envelope drops below round-off in xi^2 far out, hence the eps term
    assert np.all(err <= 2.001 * xi**2 * np.exp(-2 * 1.3 * xi) + 4 * np.finfo(float).eps * xi**2)


def test_table_interpolation_and_oddness(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("xi,w\n0.5,0.3\n1,1.1\n2,4.2\n4,16.5\n")
    f = SymbolFamily.from_csv(p)
    assert f.kind == TABLE
    assert eval_w(f, 2.0) == pytest.approx(4.2)
    assert eval_w(f, -1.0) == pytest.approx(-1.1)
    assert eval_w(f, 0.0) == 0.0
    # PCHIP keeps monotone data monotone
    xs = np.linspace(0, 4, 400)
    assert np.all(np.diff(eval_w(f, xs)) >= 0)


@pytest.mark.parametrize("table", [((1.0, 0.5), (1.0, 2.0)), ((0.0, 1.0), (0.0, 1.0)), ((1.0,), (1.0,))])
def test_table_rejects_bad_samples(table):
    with pytest.raises(PreconditionError):
        SymbolFamily(TABLE, table=table)


@pytest.mark.parametrize("kw", [dict(kind=PURE_POWER, alpha=0.0), dict(kind=PURE_POWER, alpha=2.5),
                                dict(kind=ILW, delta_ilw=0.0), dict(kind=WHITHAM_ST, b_whitham=-1.0),
                                dict(kind="bogus")])
def test_family_preconditions(kw):
    with pytest.raises(PreconditionError):
        SymbolFamily(**kw)


def test_kappa_must_be_unit():
    with pytest.raises(PreconditionError):
        KPSymbol(SymbolFamily(), 0)


def test_effective_alpha():
    assert SymbolFamily(ILW).effective_alpha == 1.0
    assert SymbolFamily(WHITHAM_ST).effective_alpha == 0.5
    assert SymbolFamily(PURE_POWER, alpha=1.5).effective_alpha == 1.5


def test_validate_pure_power_alpha1_constant_ratios():
    rep = validate_hypotheses(SymbolFamily(PURE_POWER, alpha=1.0), 1.0, 1.0)
    assert rep.ratio_min == pytest.approx((1, 2, 2), rel=1e-13)
    assert rep.ratio_max == pytest.approx((1, 2, 2), rel=1e-13)
    assert rep.passed


def test_validate_ilw():
    rep = validate_hypotheses(SymbolFamily(ILW, delta_ilw=1.0), 1.0, 1.0)
    assert min(rep.ratio_min) >= 0.5 and max(rep.ratio_max) <= 3.0
    assert rep.passed


def test_validate_whitham_ratio_tends_to_sqrt_b():
    rep = validate_hypotheses(SymbolFamily(WHITHAM_ST, b_whitham=1.0), 0.5, 10.0)
    # at the top of the range tanh is 1 and sqrt(1 + xi^2)/xi -> 1 from above
    assert rep.ratio_min[0] == pytest.approx(1.0, rel=1e-2)
    assert rep.passed


def test_validate_flags_wrong_alpha():
    rep = validate_hypotheses(SymbolFamily(PURE_POWER, alpha=2.0), 1.0, 1.0)
    assert not rep.passed
    assert len(rep.lines()) == 5


def test_validate_needs_positive_xi0():
    with pytest.raises(PreconditionError):
        validate_hypotheses(SymbolFamily(), 2.0, 0.0)
