"""Property-based checks of the structural invariants."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from focklab.cli import RunConfig
from focklab.embedding import DiscreteMeasure, carleson_sup
from focklab.functions import EntireFunction, taylor_tail, taylor_truncate
from focklab.littlewood_paley import lp_sides
from focklab.numerics import circle_mean, logsumexp
from focklab.operators import classify_growth, degree_threshold, monomial_norms
from focklab.weights import RadialWeight

finite = st.floats(-5, 5, allow_nan=False)
complexes = st.builds(complex, finite, finite)
coeff_lists = st.lists(complexes, min_size=1, max_size=8)


@given(st.lists(st.floats(-300, 300), min_size=1, max_size=20), st.sampled_from([500.0, -500.0]))
def test_logsumexp_shift(xs, shift):
    x = np.array(xs)
    assert math.isclose(logsumexp(x + shift) - shift, logsumexp(x), rel_tol=1e-12, abs_tol=1e-12)


@given(coeff_lists, st.floats(0.05, 3.0))
def test_parseval(coeffs, r):
    f = EntireFunction(tuple(coeffs))
    exact = math.hypot(*(abs(c) * r**k for k, c in enumerate(coeffs)))
    got = circle_mean(f, r, 2.0)
    assert math.isclose(got, exact, rel_tol=1e-10, abs_tol=1e-300)


@given(coeff_lists, st.sampled_from([1.0, 2.0, 3.0, math.inf]), st.floats(0.1, 2.0), st.floats(1.01, 2.0))
def test_circle_means_nondecreasing(coeffs, q, r, factor):
    f = EntireFunction(tuple(coeffs))
    assert circle_mean(f, r * factor, q) >= circle_mean(f, r, q) * (1 - 1e-9)


@given(coeff_lists, coeff_lists)
def test_derivative_linear(a, b):
    f, g = EntireFunction(tuple(a)), EntireFunction(tuple(b))
    lhs = (f + g).derivative().array
    rhs = (f.derivative() + g.derivative()).array
    n = max(lhs.size, rhs.size)
    assert np.allclose(np.pad(lhs, (0, n - lhs.size)), np.pad(rhs, (0, n - rhs.size)))


@given(st.lists(complexes, min_size=2, max_size=10), st.data())
def test_truncation_commutes_with_derivative(coeffs, data):
    f = EntireFunction(tuple(coeffs))
    M = data.draw(st.integers(1, len(coeffs) - 1))
    a = taylor_truncate(f, M).derivative().array
    b = taylor_truncate(f.derivative(), M - 1).array
    assert np.allclose(a, b)
    assert np.allclose((taylor_truncate(f, M) + taylor_tail(f, M)).array, f.array)


@settings(max_examples=8)
@given(st.builds(complex, st.floats(0.2, 3), st.floats(-3, 3)))
def test_lp_ratio_scale_invariant(c):
    w = RadialWeight.parse("power:3")
    f = EntireFunction((1, 0.5, 0, 2))
    a = lp_sides(f, w, 2.0, 2.0)
    b = lp_sides(f.scale(c), w, 2.0, 2.0)
    assert math.isclose(a.ratio, b.ratio, rel_tol=1e-10)


@settings(max_examples=10)
@given(st.floats(2.2, 6.0), st.integers(0, 40))
def test_power_norms_gamma(alpha, n):
    mn = monomial_norms(RadialWeight("power", alpha), 2.0, n)
    ref = math.log(2 * math.pi / alpha) - (2 * n + 2) / alpha * math.log(2) + math.lgamma((2 * n + 2) / alpha)
    assert math.isclose(2 * mn.log_values[n], ref, rel_tol=1e-9, abs_tol=1e-9)


@given(st.floats(2.5, 6.0), st.sampled_from([0.5, 1.0, 2.0, 4.0]), st.sampled_from([0.5, 1.0, 2.0, 4.0]), st.integers(2, 8))
def test_threshold_monotone_in_degree(alpha, p, q, d):
    w = RadialWeight("power", alpha)
    if degree_threshold(w, p, q, d).bounded:
        assert degree_threshold(w, p, q, d - 1).bounded
    if degree_threshold(w, p, q, d).compact:
        assert degree_threshold(w, p, q, d - 1).compact


@given(st.floats(-3.0, 3.0).filter(lambda s: abs(s) > 0.1), st.floats(-2, 2))
def test_power_law_slope_recovered(slope, offset):
    r = np.geomspace(1, 1e6, 200)
    got, verdict = classify_growth(r, offset + slope * np.log(r))
    assert math.isclose(got, slope, abs_tol=1e-9)
    # decay is only called vanishing once the tail has dropped tenfold
    if slope > 0:
        expected = "Unbounded"
    elif -slope * math.log(r[-1] / r[0]) > math.log(10):
        expected = "VanishesAtInfinity"
    else:
        expected = "Bounded"
    assert verdict == expected


@settings(max_examples=15)
@given(
    st.lists(st.tuples(st.builds(complex, st.floats(-2, 2), st.floats(-2, 2)), st.floats(1e-3, 10)), min_size=1, max_size=6),
    st.floats(0.1, 100),
)
def test_carleson_homogeneous(atoms, c):
    w = RadialWeight.parse("power:3")
    mu = DiscreteMeasure.from_atoms(atoms)
    a = carleson_sup(mu, w, 2.0, 2.0, grid_n=20, grid_r=3.0).K_value
    b = carleson_sup(mu.scaled(c), w, 2.0, 2.0, grid_n=20, grid_r=3.0).K_value
    assert math.isclose(b, c * a, rel_tol=1e-12)


@given(
    st.sampled_from(["power:3", "exp:1.5", "gauss"]),
    st.lists(st.sampled_from(["binom:2", "poly:1,2", "monomial:3"]), max_size=3),
    st.floats(0.5, 8),
    st.one_of(st.none(), st.floats(0.5, 8)),
    st.lists(st.integers(1, 500), min_size=1, max_size=4),
    st.integers(0, 2**31),
)
def test_config_round_trip(weight, fns, p, q, sizes, seed):
    cfg = RunConfig(subcommand="lp", weight=weight, functions=fns, p=p, q=q, sizes=sizes, seed=seed)
    assert RunConfig.from_text(cfg.to_text()) == cfg
