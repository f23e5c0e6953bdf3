import dataclasses
import math

import numpy as np
import pytest

from focklab.covering import (
    build_covering,
    estimate_c1,
    m_tau,
    make_config,
    pointwise_estimate_check,
    sample_disc_pairs,
    scaled_tau,
    tau_doubling_check,
    verify_covering,
)
from focklab.errors import GridTooCoarse, LipschitzViolation
from focklab.functions import builtin_function
from focklab.weights import RadialWeight

POW3 = RadialWeight.parse("power:3")


@pytest.fixture(scope="module")
def unit_cover():
    cfg = make_config(None, 3.0, t_const=1.0)
    return cfg, build_covering(None, cfg)


def test_scaled_tau_examples():
    assert scaled_tau(POW3, 4.0, 0.2) == pytest.approx(0.2 / 6, rel=1e-13)
    assert scaled_tau(POW3, 0.0, 0.2) == pytest.approx(0.2 / 3, rel=1e-13)
    e1 = RadialWeight.parse("exp:1")
    assert scaled_tau(e1, 3.0, 1.0) == pytest.approx((math.exp(3) + math.exp(3) / 3) ** -0.5, rel=1e-13)


def test_scaled_tau_decreasing_beyond_blend():
    r = np.linspace(1.1, 15, 500)
    assert np.all(np.diff(scaled_tau(POW3, r, 0.25)) < 0)


def test_m_tau_formula():
    assert m_tau(0.5) == 0.25
    assert m_tau(4.0) == pytest.approx(1 / 16)
    c1 = estimate_c1(POW3, 15.0, 1e-3)
    assert c1 == pytest.approx(0.14437, rel=1e-3)


def test_unit_covering_all_checks(unit_cover):
    cfg, cov = unit_cover
    z = cov.centers
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, np.inf)
    assert np.min(d) >= 1.0
    rep = verify_covering(cov, None, cfg)
    assert rep.separation and rep.coverage and rep.engulfing
    assert rep.coverage_fraction == 1.0
    assert 1 <= rep.multiplicity_min and rep.multiplicity_max <= 30


def test_single_point_domain():
    cfg = make_config(None, 0.0, t_const=1.0)
    cov = build_covering(None, cfg)
    assert cov.n_centers == 1 and cov.centers[0] == 0


def test_tampered_center_breaks_coverage(unit_cover):
    cfg, cov = unit_cover
    keep = np.ones(cov.n_centers, bool)
    keep[cov.n_centers // 2] = False
    rep = verify_covering(cov.subset(keep), None, cfg)
    assert not rep.coverage and rep.coverage_fraction < 1.0


def test_tampered_radius_breaks_separation(unit_cover):
    cfg, cov = unit_cover
    radii = cov.radii.copy()
    radii[0] *= 2.0
    bad = dataclasses.replace(cov, radii=radii)
    rep = verify_covering(bad, None, cfg)
    assert not rep.separation and rep.first_separation_failure is not None


def test_power_covering_small_domain():
    cfg = make_config(POW3, 4.0)
    assert cfg.delta == pytest.approx(0.25) and cfg.delta_halvings == 0
    cov = build_covering(POW3, cfg)
    rep = verify_covering(cov, POW3, cfg)
    assert rep.separation and rep.coverage and rep.engulfing
    assert rep.multiplicity_min >= 1 and rep.t_increase_violations == 0
    assert np.all(np.diff(cov.radii) <= cfg.grid_step / 4)


def test_greedy_determinism():
    cfg = make_config(POW3, 2.5)
    a = build_covering(POW3, cfg)
    b = build_covering(POW3, cfg)
    assert np.array_equal(a.index_i, b.index_i) and np.array_equal(a.index_k, b.index_k)


def test_explicit_delta_violating_lipschitz():
    with pytest.raises(LipschitzViolation):
        make_config(POW3, 5.0, delta=4.0)


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarse):
        make_config(None, 2.0, t_const=1.0, grid_step=0.5)
    cfg = make_config(None, 2.0, t_const=1.0)
    with pytest.raises(GridTooCoarse):
        build_covering(None, dataclasses.replace(cfg, grid_step=0.5))


def test_tau_doubling():
    mt = m_tau(estimate_c1(POW3, 15, 1e-3))
    assert tau_doubling_check(POW3, sample_disc_pairs(POW3, 5.0, mt, 100, seed=1))
    assert tau_doubling_check(POW3, [(2.0 + 1j, 2.0 + 1j)])
    assert tau_doubling_check(POW3, [])


def test_tau_doubling_negative_control_recorded():
    mt = m_tau(estimate_c1(POW3, 15, 1e-3))
    # ten times the admissible scale: the bound is no longer guaranteed
    result = tau_doubling_check(POW3, sample_disc_pairs(POW3, 1.5, 10 * mt, 400, seed=2))
    assert result in (True, False)


def test_pointwise_estimate_constant_function():
    a, delta, p = 2.0 + 0.5j, 0.2, 2.0
    lhs, mean = pointwise_estimate_check(POW3, p, builtin_function("poly:1"), a, delta)
    assert lhs == pytest.approx(math.exp(-p * abs(a) ** 3), rel=1e-12)
    rad = delta * float(POW3.tau_tilde(abs(a)))
    lo, hi = abs(a) - rad, abs(a) + rad
    assert math.pi * math.exp(-p * hi**3) <= mean <= math.pi * math.exp(-p * lo**3)


def test_pointwise_estimate_cube():
    f = builtin_function("monomial:3")
    lhs, mean = pointwise_estimate_check(POW3, 2.0, f, 3.0, 0.25)
    assert 0 < lhs / mean < 10
    lhs0, _ = pointwise_estimate_check(POW3, 2.0, f, 0.0, 0.25)
    assert lhs0 == 0.0
