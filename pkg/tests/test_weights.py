import math

import numpy as np
import pytest

from focklab.errors import GridTooShort, NonpositiveLaplacian, ParseError, SingularLimit
from focklab.weights import RadialWeight, class_I_report, weight_profile

SPECS = ["power:3", "power:4", "exp:1", "exp:1.5", "doubleexp", "gauss", "log:4"]


@pytest.mark.parametrize(
    "spec, r, expected",
    [
        ("power:3", 2.0, (8.0, 12.0, 12.0, 18.0, 18**-0.5)),
        ("gauss", 1.0, (0.5, 1.0, 1.0, 2.0, 2**-0.5)),
        ("exp:1", 1.0, (math.e, math.e, math.e, 2 * math.e, (2 * math.e) ** -0.5)),
    ],
)
def test_profile_closed_forms(spec, r, expected):
    prof = weight_profile(RadialWeight.parse(spec), r)
    assert np.allclose(prof, expected, rtol=1e-13, atol=0)


@pytest.mark.parametrize("spec", SPECS)
@pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 5.0])
def test_derivatives_match_central_differences(spec, r):
    w = RadialWeight.parse(spec)
    if spec == "doubleexp" and r > 2:
        r = 2.0  # keeps phi well inside double range
    h = 1e-5 * max(1.0, r)
    fd1 = (w.phi(r + h) - w.phi(r - h)) / (2 * h)
    fd2 = (w.dphi(r + h) - w.dphi(r - h)) / (2 * h)
    assert abs(w.dphi(r) - fd1) / max(1.0, abs(w.dphi(r))) <= 1e-6
    assert abs(w.ddphi(r) - fd2) / max(1.0, abs(w.ddphi(r))) <= 1e-6


@pytest.mark.parametrize("alpha", [2.5, 3.0, 4.0, 7.0])
def test_power_laplacian_exact(alpha):
    w = RadialWeight("power", alpha)
    r = np.linspace(0.3, 20, 50)
    assert np.allclose(w.laplacian(r), alpha**2 * r ** (alpha - 2), rtol=1e-13)


@pytest.mark.parametrize("spec", ["power:3", "exp:1", "doubleexp"])
def test_tau_strictly_decreasing_beyond_one(spec):
    w = RadialWeight.parse(spec)
    r = np.linspace(1.0, 6.0 if spec == "doubleexp" else 40.0, 300)
    assert np.all(np.diff(w.tau(r)) < 0)


def test_log_quantities_consistent():
    w = RadialWeight.parse("exp:1.5")
    r = np.array([0.7, 2.0, 9.0])
    assert np.allclose(np.exp(w.log_laplacian(r)), w.laplacian(r), rtol=1e-13)
    assert np.allclose(np.exp(w.log_tau(r)), w.tau(r), rtol=1e-13)
    assert np.allclose(w.neg_log_density(2.0, r), 2.0 * w.phi(r))


def test_doubleexp_log_domain_survives_overflow():
    w = RadialWeight.parse("doubleexp")
    assert np.isinf(w.phi(700.0))
    assert np.isfinite(w.log_dphi(700.0)) and np.isfinite(w.log_tau(700.0))


def test_tau_tilde_is_continuous_blend():
    w = RadialWeight.parse("power:3")
    assert w.tau_tilde(0.0) == pytest.approx(1 / 3, rel=1e-13)
    assert w.tau_tilde(4.0) == pytest.approx(1 / 6, rel=1e-13)
    r = np.linspace(0.0, 2.0, 4001)
    t = w.tau_tilde(r)
    assert np.max(np.abs(np.diff(t))) < 1e-3


def test_laplacian_limits_at_zero():
    assert weight_profile(RadialWeight.parse("gauss"), 0.0).laplacian == 2.0
    with pytest.raises(NonpositiveLaplacian):
        weight_profile(RadialWeight.parse("power:3"), 0.0)
    with pytest.raises(SingularLimit):
        weight_profile(RadialWeight("power", 1.5), 0.0)


def test_parse_errors_name_token():
    with pytest.raises(ParseError) as e:
        RadialWeight.parse("cubic:3")
    assert e.value.token == "cubic"
    with pytest.raises(ParseError) as e:
        RadialWeight.parse("power:three")
    assert e.value.token == "three"


@pytest.mark.parametrize("spec", SPECS)
def test_spec_round_trip(spec):
    assert RadialWeight.parse(RadialWeight.parse(spec).spec) == RadialWeight.parse(spec)


@pytest.mark.parametrize(
    "spec, top, expected",
    [("power:3", 50, True), ("exp:1", 30, True), ("gauss", 50, False), ("log:4", 50, False)],
)
def test_class_I_report(spec, top, expected):
    rep = class_I_report(RadialWeight.parse(spec), np.linspace(1, top, 200))
    assert rep.in_class_I is expected


def test_class_I_report_short_grid():
    with pytest.raises(GridTooShort):
        class_I_report(RadialWeight.parse("power:3"), np.linspace(1, 9, 20))
