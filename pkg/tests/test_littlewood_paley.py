import math

import numpy as np
import pytest

from focklab.errors import DivergentTail, GridTooShort, ParseError
from focklab.functions import EntireFunction, builtin_function
from focklab.littlewood_paley import (
    DiscWeight,
    DistortionTable,
    bergman_distortion,
    bergman_L_condition,
    distortion,
    distortion_asymptote_check,
    distortion_profile,
    kp_condition,
    kp_quantity,
    lp_ratio_sweep,
    lp_sides,
    reliable_radius,
)
from focklab.weights import RadialWeight

from oracles import lp_sides_power3, power3_psi2, power3_tail

GAUSS = RadialWeight.parse("gauss")
POW3 = RadialWeight.parse("power:3")

# 30-digit mpmath values
PSI2_POW3_R2 = 0.0272414307923070416640794646554
PSIDPHI_POW3_P2_R4 = 0.398968991212221349317739844638
PSIDPHI_POW4_P1_R3 = 0.745453566530405507848999111364
LP_RATIO_Z5_POW3 = 12.0229380985203520571713493182
GAUSS_RATIO_Z = 11.9531295031864152396556275588
GAUSS_RATIO_Z2 = 9.5117022588765032611129952107
BERGMAN_EXP_POLE_09 = 0.843666606021191812393018423356


def test_gaussian_distortion_closed_forms():
    assert distortion(GAUSS, 1.0, 1.0) == pytest.approx(0.5, rel=1e-8)
    assert distortion(GAUSS, 2.0, 0.0) == pytest.approx(0.5, rel=1e-8)
    for r in (0.0, 1.0, 3.0, 10.0):
        assert distortion(GAUSS, 2.0, r) == pytest.approx(1 / (2 * (1 + r)), rel=1e-8)


def test_power_distortion_brute_force():
    brute = power3_tail(2.0) / 3.0
    assert brute == pytest.approx(PSI2_POW3_R2, rel=1e-9)
    assert distortion(POW3, 2.0, 2.0) == pytest.approx(brute, rel=1e-6)
    assert float(power3_psi2(2.0)) == pytest.approx(PSI2_POW3_R2, rel=1e-10)


def test_distortion_table_matches_direct():
    for spec, p in [("power:3", 2.0), ("exp:1", 1.0), ("log:4", 1.0), ("doubleexp", 1.0)]:
        w = RadialWeight.parse(spec)
        table = DistortionTable(w, p)
        r = np.array([0.0, 0.3, 1.0, 2.5]) if spec == "doubleexp" else np.array([0.0, 0.7, 2.0, 6.0])
        direct = np.array([math.log(distortion(w, p, x)) for x in r])
        assert np.allclose(table.log_psi(r), direct, atol=1e-8)


def test_halved_tolerance_agreement():
    a = distortion(POW3, 2.0, 1.3, tol=1e-9)
    b = distortion(POW3, 2.0, 1.3, tol=5e-10)
    assert a == pytest.approx(b, rel=1e-6)


def test_profile_positive_and_continuous():
    r = np.linspace(0.0, 6.0, 400)
    prof = distortion_profile(POW3, 2.0, r)
    v = np.asarray(prof.psi_values)
    assert np.all(v > 0)
    assert np.all(v[1:] / v[:-1] < 10) and np.all(v[:-1] / v[1:] < 10)
    assert np.allclose(prof.psi_times_dphi, v * POW3.dphi(r))


def test_gaussian_asymptote_exact():
    r = np.array([1.0, 5.0, 50.0])
    vals = distortion_asymptote_check(GAUSS, 2.0, r)
    assert np.allclose(vals, r / (2 * (1 + r)), rtol=1e-8)


def test_power_asymptote_values_frozen():
    # the product approaches 1/p only slowly, like r/(p(1+r)) plus corrections
    (v1,) = distortion_asymptote_check(POW3, 2.0, [4.0])
    (v2,) = distortion_asymptote_check(RadialWeight.parse("power:4"), 1.0, [3.0])
    assert v1 == pytest.approx(PSIDPHI_POW3_P2_R4, rel=1e-8)
    assert v2 == pytest.approx(PSIDPHI_POW4_P1_R3, rel=1e-8)


def test_power_asymptote_increases_toward_limit():
    r = np.linspace(2.0, reliable_radius(POW3, 2.0), 12)
    vals = np.asarray(distortion_asymptote_check(POW3, 2.0, r))
    assert np.all(np.diff(vals) > 0) and np.all(vals < 0.5)


def test_divergent_log_weight():
    with pytest.raises(DivergentTail):
        distortion(RadialWeight.parse("log:2"), 1.0, 1.0)


def test_kp_gaussian():
    r = np.linspace(1.0, 25.0, 100)
    q = kp_quantity(GAUSS, 2.0, r)
    assert np.allclose(q, (1 - 2 * r**2) / (2 * r**2), rtol=1e-8)
    rep = kp_condition(GAUSS, 2.0, r)
    assert rep.sup_estimate == pytest.approx(-0.5, rel=1e-8)
    assert rep.satisfied


@pytest.mark.parametrize("spec, p, top", [("power:3", 2.0, 30.0), ("log:4", 1.0, 40.0), ("doubleexp", 1.0, 6.0)])
def test_kp_satisfied(spec, p, top):
    assert kp_condition(RadialWeight.parse(spec), p, np.linspace(1.0, top, 120)).satisfied


def test_kp_grid_too_short():
    with pytest.raises(GridTooShort):
        kp_condition(POW3, 2.0, np.linspace(1.0, 10.0, 20))


def test_lp_constant_gaussian():
    comp = lp_sides(builtin_function("poly:3"), GAUSS, 2.0, 2.0)
    assert comp.lhs == pytest.approx(4.5, rel=1e-8)
    assert comp.rhs == pytest.approx(9.0, rel=1e-12)
    assert comp.ratio == pytest.approx(0.5, rel=1e-8)


def test_lp_zero_function_flagged():
    comp = lp_sides(EntireFunction((0,)), GAUSS, 2.0, 2.0)
    assert comp.ratio is None and comp.lhs == comp.rhs == 0.0
    assert "UndefinedRatio" in comp.flag


def test_lp_gaussian_monomials_gamma():
    # lhs for z^n is int r^{2n+1} e^{-r^2} = n!/2
    for n in (1, 2, 4):
        comp = lp_sides(builtin_function(f"monomial:{n}"), GAUSS, 2.0, 2.0)
        assert comp.lhs == pytest.approx(math.factorial(n) / 2, rel=1e-8)
    assert lp_sides(builtin_function("monomial:1"), GAUSS, 2.0, 2.0).ratio == pytest.approx(GAUSS_RATIO_Z, rel=1e-8)
    assert lp_sides(builtin_function("monomial:2"), GAUSS, 2.0, 2.0).ratio == pytest.approx(GAUSS_RATIO_Z2, rel=1e-8)


def test_lp_z5_power_oracle():
    comp = lp_sides(builtin_function("monomial:5"), POW3, 2.0, 2.0)
    lhs, rhs = lp_sides_power3([0, 0, 0, 0, 0, 1], panels=200000, n_angular=64)
    assert 0.01 <= comp.ratio <= 100
    assert comp.ratio == pytest.approx(lhs / rhs, rel=1e-5)
    assert comp.ratio == pytest.approx(LP_RATIO_Z5_POW3, rel=1e-7)
    assert comp.lhs == pytest.approx(0.125, rel=1e-8)


def test_lp_scaling_invariance():
    f = builtin_function("binom:3")
    a = lp_sides(f, POW3, 2.0, 2.0)
    b = lp_sides(f.scale(2 - 1j), POW3, 2.0, 2.0)
    assert b.lhs == pytest.approx(5 * a.lhs, rel=1e-10)
    assert b.rhs == pytest.approx(5 * a.rhs, rel=1e-10)
    assert b.ratio == pytest.approx(a.ratio, rel=1e-10)


def test_lp_sweep_single_constant():
    sweep = lp_ratio_sweep([builtin_function("poly:2")], POW3, 2.0, 2.0)
    assert sweep.max_ratio == sweep.min_ratio


def test_lp_sweep_gaussian_family_frozen():
    fns = [builtin_function(s) for s in ("poly:1", "monomial:1", "monomial:2")]
    sweep = lp_ratio_sweep(fns, GAUSS, 2.0, 2.0)
    assert sweep.min_ratio == pytest.approx(0.5, rel=1e-8)
    assert sweep.max_ratio == pytest.approx(GAUSS_RATIO_Z, rel=1e-8)


def test_lp_q_infinity_runs():
    comp = lp_sides(builtin_function("binom:2"), POW3, 2.0, math.inf)
    assert comp.ratio > 0 and math.isfinite(comp.ratio)


def test_bergman_constant_weight():
    wd = DiscWeight.parse("const")
    assert bergman_distortion(wd, 0.25) == pytest.approx(0.75, rel=1e-12)
    sup, ok = bergman_L_condition(wd, np.linspace(0, 0.95, 20), bound=0.0)
    assert sup == 0.0 and ok


def test_bergman_exp_pole_frozen():
    wd = DiscWeight.parse("exp_pole:1")
    val = bergman_distortion(wd, 0.9) / (1 - 0.9) ** 2
    assert val == pytest.approx(BERGMAN_EXP_POLE_09, rel=1e-8)


def test_bergman_exp_pole_approaches_one():
    wd = DiscWeight.parse("exp_pole:1")
    vals = [bergman_distortion(wd, r) / (1 - r) ** 2 for r in (0.9, 0.97, 0.99)]
    assert np.all(np.diff(vals) > 0) and abs(vals[-1] - 1) < 0.03


def test_bergman_triple_exp_finite():
    wd = DiscWeight.parse("triple_exp")
    assert 0 < bergman_distortion(wd, 0.3) < 0.7


def test_disc_weight_parse_errors():
    with pytest.raises(ParseError):
        DiscWeight.parse("exp_pole:-1")
    with pytest.raises(ParseError):
        DiscWeight.parse("flat")
