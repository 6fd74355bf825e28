import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rotation_spectrum
from hopfnet.errors import DegenerateDenominator
from hopfnet.lyapunov import (
    Criticality,
    HopfDerivs,
    classify_analytic,
    gamma_threshold,
    l1_full,
    l1_general,
    l1_subunit,
)
from hopfnet.spectral import GammaSet, gamma_set

X, Y = sp.symbols("x y")


def derivs_of(f, g=sp.Integer(0)):
    """Symbolic differentiation at the origin as an independent oracle."""
    out = {}
    for name, expr in (("f", f), ("g", g)):
        for key, vars_ in {
            "xx": (X, X), "xy": (X, Y), "yy": (Y, Y),
            "xxx": (X, X, X), "xxy": (X, X, Y), "xyy": (X, Y, Y), "yyy": (Y, Y, Y),
        }.items():
            out[f"{name}_{key}"] = float(sp.diff(expr, *vars_).subs({X: 0, Y: 0}))
    return HopfDerivs(**out)


def test_linear_system():
    assert l1_general(HopfDerivs()) == 0.0


def test_pure_cubic():
    assert l1_general(derivs_of(X**3)) == pytest.approx(0.375)


def test_g_x2y():
    assert l1_general(derivs_of(sp.Integer(0), X**2 * Y)) == pytest.approx(0.125)


def test_quadratic_products():
    d = derivs_of(X * Y + X**2 + 2 * Y**2, 3 * X * Y + X**2 - Y**2)
    expected = (1 * (2 + 4) - 3 * (2 - 2) - 2 * 2 + 4 * (-2)) / 16
    assert l1_general(d) == pytest.approx(expected)


@pytest.mark.parametrize("a", [-2.0, 0.0, 3.5])
@pytest.mark.parametrize("b", [-2.0, 0.0, 1.0])
def test_subunit_from_symbolic_derivatives(a, b):
    d = derivs_of(a * X**2 + b * X**3)
    assert l1_general(d) == pytest.approx(0.375 * b, abs=1e-15)
    assert l1_subunit(b) == pytest.approx(0.375 * b, abs=1e-15)


def test_subunit_examples():
    assert l1_subunit(-2.0) == pytest.approx(-0.75)
    assert l1_subunit(0.0) == 0.0
    assert l1_subunit(1.0) == pytest.approx(0.375)


def test_full_rotation_fixture():
    g = gamma_set(rotation_spectrum())
    assert l1_full(0.0, -1.0, 2, g) == pytest.approx(-0.46875, abs=1e-12)
    assert l1_full(1.0, -1.0, 2, g) == pytest.approx(-0.46875 + 2 * g.weighted_sum, abs=1e-12)
    assert l1_full(1.0, -1.0, 2, g) == pytest.approx(-0.46489, abs=1e-5)
    assert l1_full(3.0, 0.0, 2, g) > 0


def test_gamma_rotation_fixture():
    g = gamma_set(rotation_spectrum())
    assert gamma_threshold(g) == pytest.approx(math.sqrt(0.234375 / g.weighted_sum), rel=1e-12)
    assert gamma_threshold(g) == pytest.approx(11.014, abs=1e-3)


def test_gamma_degenerate():
    g = GammaSet(1.0, np.zeros(2), 0.0)
    with pytest.raises(DegenerateDenominator):
        gamma_threshold(g)


def test_gamma_homogeneity():
    g = gamma_set(rotation_spectrum())
    doubled = GammaSet(g.gamma_quartic, 2 * g.gamma_cross, 4 * g.weighted_sum)
    assert gamma_threshold(doubled) == pytest.approx(gamma_threshold(g) / 2, rel=1e-14)


def test_classify_examples():
    g = gamma_set(rotation_spectrum())
    assert classify_analytic(123.4, 1.0, 2, g).classification is Criticality.SUBCRITICAL
    assert classify_analytic(0.0, -1.0, 2, g).classification is Criticality.SUPERCRITICAL
    assert classify_analytic(22.0, -1.0, 2, g).classification is Criticality.SUBCRITICAL
    assert classify_analytic(5.0, -1.0, 2, g).classification is Criticality.SUPERCRITICAL
    assert classify_analytic(0.5, 0.0, 2, g).classification is Criticality.SUBCRITICAL
    assert classify_analytic(0.0, 0.0, 2, g).classification is Criticality.DEGENERATE


def test_classify_report_fields():
    g = gamma_set(rotation_spectrum())
    rep = classify_analytic(5.0, -4.0, 2, g)
    assert rep.threshold == pytest.approx(rep.gamma * 2.0)
    assert rep.degeneracy_band == pytest.approx(1e-6 * rep.threshold)
    assert rep.to_dict()["classification"] == "Supercritical"
    assert classify_analytic(5.0, 1.0, 2, g).threshold is None


def test_classify_at_threshold_is_degenerate():
    g = gamma_set(rotation_spectrum())
    thr = gamma_threshold(g)
    assert classify_analytic(thr, -1.0, 2, g).classification is Criticality.DEGENERATE


def test_classify_uncoupled_falls_back_to_subunit():
    g = GammaSet(1.0, np.zeros(2), 0.0)
    rep = classify_analytic(10.0, -1.0, 3, g)
    assert rep.gamma is None and rep.threshold is None
    assert rep.classification is Criticality.SUPERCRITICAL
    assert classify_analytic(10.0, 0.5, 3, g).classification is Criticality.SUBCRITICAL


gammas = st.builds(
    lambda q, w: GammaSet(q, np.zeros(1), w),
    st.floats(1e-3, 1.0),
    st.floats(1e-8, 1.0),
)


@settings(max_examples=300, deadline=None)
@given(gammas, st.floats(-50, 50), st.floats(-10, -1e-3), st.integers(2, 500))
def test_sign_rule_matches_threshold(g, a, b, n):
    rep = classify_analytic(a, b, n, g)
    if abs(abs(a) - rep.threshold) > 1e-5 * rep.threshold:
        expected = Criticality.SUBCRITICAL if abs(a) > rep.threshold else Criticality.SUPERCRITICAL
        assert rep.classification is expected
        assert (rep.l1_full > 0) == (expected is Criticality.SUBCRITICAL)


@settings(max_examples=200, deadline=None)
@given(gammas, st.floats(-50, 50), st.floats(-10, 10), st.integers(2, 500))
def test_even_in_a(g, a, b, n):
    assert l1_full(a, b, n, g) == l1_full(-a, b, n, g)


@settings(max_examples=200, deadline=None)
@given(gammas, st.floats(0, 20), st.floats(0.01, 5), st.floats(-10, 10), st.integers(2, 500))
def test_monotone(g, a, da, b, n):
    assert l1_full(a + da, b, n, g) > l1_full(a, b, n, g)
    assert l1_full(a, b + da, n, g) > l1_full(a, b, n, g)


@settings(max_examples=200, deadline=None)
@given(gammas, st.floats(-50, 50), st.floats(-10, 10), st.integers(2, 500), st.integers(2, 500))
def test_tag_independent_of_n(g, a, b, n1, n2):
    assert classify_analytic(a, b, n1, g).classification is classify_analytic(a, b, n2, g).classification
    assert classify_analytic(a, b, n1, g).gamma == classify_analytic(a, b, n2, g).gamma
