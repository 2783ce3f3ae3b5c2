import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metwarp import exprlang, geometry, warped
from metwarp.errors import MetwarpError, PreconditionError
from metwarp.geometry import chart_from_text, euclidean_chart
from metwarp.warped import (HORIZONTAL, VERTICAL, WarpedProduct, connection_closed_form, connection_oracle,
                            horizontal, projections, vertical)

P = exprlang.parse

HALF_LINE = chart_from_text("B", ("u",), ((0.5, 3),), [["1"]])
CIRCLE = chart_from_text("F", ("a",), ((0.1, 6.2),), [["1"]])
POLAR = WarpedProduct(HALF_LINE, CIRCLE, P("u"), "polar")

T_LINE = euclidean_chart("T", ("t",), ((-1, 1),))
FLAT2 = euclidean_chart("F2", ("x", "y"), ((-1, 1), (-1, 1)))
HYP3 = WarpedProduct(T_LINE, FLAT2, P("exp(t)"), "H3")

SPHERE = chart_from_text("S2", ("th", "ph"), ((0.3, 2.8), (0.1, 6.2)), [["1", "0"], ["0", "sin(th)^2"]])
HYP2 = chart_from_text("H2", ("s", "z"), ((-1, 1), (-1, 1)), [["1", "0"], ["0", "exp(2*s)"]])
S_LINE = WarpedProduct(SPHERE, euclidean_chart("L", ("w",), ((-1, 1),)), P("1"), "SL")
S_H = WarpedProduct(SPHERE, HYP2, P("1"), "SH")
FLAT_FLAT = WarpedProduct(euclidean_chart("A", ("x",), ((-1, 1),)), euclidean_chart("C", ("y",), ((-1, 1),)),
                          P("1"), "AA")


def _example3(n):
    base = chart_from_text("base", ("u",), ((0.5, 3),), [[str(n)]])
    coords = tuple(f"a{i}" for i in range(1, n + 1))
    eye = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    fiber = chart_from_text("fiber", coords, ((0.1, 1.4),) * n, eye)
    return WarpedProduct(base, fiber, P("u"), "ex3")


EX3 = _example3(2)
# sphere base with a non-constant warp and a 2-dim curved fiber
CURVED = WarpedProduct(SPHERE, HYP2, P("2 + cos(th)*sin(ph)"), "curved")
SPECS = [POLAR, HYP3, EX3, CURVED, S_LINE, S_H]


def _points(spec, count=10, seed=5):
    return geometry.sample_points(spec.chart, np.random.default_rng(seed), count)


def test_build_chart_examples():
    x = [1.7, 0.4]
    assert np.allclose(geometry.metric_at(POLAR.chart, x), np.diag([1, 1.7 ** 2]), atol=0)
    g = geometry.metric_at(S_LINE.chart, [1.0, 2.0, 0.3])
    assert np.allclose(g, np.diag([1, np.sin(1.0) ** 2, 1]), atol=1e-15)
    g = geometry.metric_at(EX3.chart, [1.5, 0.3, 0.6])
    assert np.allclose(g, np.diag([2, 2.25, 2.25]), atol=1e-15)
    assert EX3.chart.coords == ("u", "a1", "a2")


def test_unwarped_chart_is_block_product():
    g = geometry.metric_at(S_H.chart, [1.0, 2.0, 0.5, 0.1])
    expected = np.zeros((4, 4))
    expected[:2, :2] = geometry.metric_at(SPHERE, [1.0, 2.0])
    expected[2:, 2:] = geometry.metric_at(HYP2, [0.5, 0.1])
    assert np.array_equal(g, expected)
    assert S_H.is_unwarped() and not POLAR.is_unwarped()


def test_spec_validation():
    with pytest.raises(MetwarpError):
        WarpedProduct(HALF_LINE, HALF_LINE, P("u"))
    with pytest.raises(MetwarpError):
        WarpedProduct(HALF_LINE, CIRCLE, P("a"))
    neg = WarpedProduct(T_LINE, FLAT2, P("t"))
    with pytest.raises(PreconditionError):
        warped.check_warp_positive(neg, [[-0.5]])
    with pytest.raises(PreconditionError):
        warped.WarpedPoint(neg, [-0.5, 0.0, 0.0])
    assert warped.check_warp_positive(POLAR, [[0.7], [2.0]]) == 0.7


def test_projections():
    spec = WarpedProduct(SPHERE, euclidean_chart("L", ("w",), ((-1, 1),)), P("1"))
    b, f = projections(spec, [1, 2, 3])
    assert b.tolist() == [1, 2] and f.tolist() == [3]
    h = horizontal(spec, [4.0, 5.0])
    assert h.kind == HORIZONTAL and not np.any(projections(spec, h.assembled)[1])
    v = vertical(spec, [6.0])
    assert v.kind == VERTICAL and not np.any(projections(spec, v.assembled)[0])
    with pytest.raises(MetwarpError):
        horizontal(spec, [1.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=4, max_size=4))
def test_projection_identities(values):
    spec = S_H
    v = np.array(values)
    pi1 = lambda w: np.concatenate([projections(spec, w)[0], np.zeros(spec.m)])  # noqa: E731
    pi2 = lambda w: np.concatenate([np.zeros(spec.n), projections(spec, w)[1]])  # noqa: E731
    assert np.array_equal(pi1(v) + pi2(v), v)
    assert np.array_equal(pi1(pi1(v)), pi1(v))
    assert np.array_equal(pi2(pi2(v)), pi2(v))
    assert not np.any(pi1(pi2(v)))


def test_connection_polar_examples():
    u = 1.3
    x = [u, 0.8]
    zero, one = [P("0")], [P("1")]
    got = connection_closed_form(POLAR, x, [1.0, 0.0], zero, one)
    assert np.allclose(got, [0.0, 1 / u], atol=1e-15)
    got = connection_closed_form(POLAR, x, [0.0, 1.0], zero, one)
    assert np.allclose(got, [-u, 0.0], atol=1e-15)
    for X in ([1.0, 0.0], [0.0, 1.0]):
        assert np.allclose(connection_oracle(POLAR, x, X, zero, one),
                           connection_closed_form(POLAR, x, X, zero, one), atol=1e-14)


def test_connection_unwarped_splits():
    x = [1.0, 2.0, 0.5, 0.1]
    Y1 = [P("sin(ph)"), P("th^2")]
    Y2 = [P("s*z"), P("cos(z)")]
    X = np.array([0.3, -0.7, 1.1, 0.4])
    got = connection_closed_form(S_H, x, X, Y1, Y2)
    b = geometry.local(SPHERE, x[:2])
    f = geometry.local(HYP2, x[2:])
    y1 = np.array([np.sin(2.0), 1.0])
    dy1 = np.array([[0.0, 2.0], [np.cos(2.0), 0.0]])
    y2 = np.array([0.05, np.cos(0.1)])
    dy2 = np.array([[0.1, 0.0], [0.5, -np.sin(0.1)]])
    assert np.allclose(got[:2], b.covariant(X[:2], y1, dy1), atol=1e-14)
    assert np.allclose(got[2:], f.covariant(X[2:], y2, dy2), atol=1e-14)


def _field(chart, k):
    cs = chart.coords
    return [P(f"{k + i + 1} + sin({c})*{cs[-1 - i % len(cs)]}") for i, c in enumerate(cs)]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
def test_connection_matches_oracle(spec):
    Y1, Y2 = _field(spec.base, 0), _field(spec.fiber, 3)
    rng = np.random.default_rng(1)
    for x in _points(spec):
        for kind in ("HH", "HV", "VH", "VV"):
            X = np.zeros(spec.n + spec.m)
            if kind[0] == "H":
                X[: spec.n] = rng.normal(size=spec.n)
            else:
                X[spec.n:] = rng.normal(size=spec.m)
            y1 = Y1 if kind[1] == "H" else [P("0")] * spec.n
            y2 = Y2 if kind[1] == "V" else [P("0")] * spec.m
            closed = connection_closed_form(spec, x, X, y1, y2)
            oracle = connection_oracle(spec, x, X, y1, y2)
            assert np.max(np.abs(closed - oracle)) <= 1e-8


def test_connection_field_checks():
    with pytest.raises(MetwarpError):
        connection_closed_form(POLAR, [1.0, 1.0], [1.0, 0.0], [P("a")], [P("1")])
    with pytest.raises(MetwarpError):
        connection_closed_form(POLAR, [1.0, 1.0], [1.0, 0.0], [P("1"), P("1")], [P("1")])


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
@pytest.mark.parametrize("case", [1, 2, 3, 4, 5])
def test_riemann_cases_match_oracle(spec, case):
    assert warped.riemann_case_residual(spec, case, _points(spec), require_m_gt_1=False) <= 1e-8


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
@pytest.mark.parametrize("case", [1, 2, 3])
def test_ricci_cases_match_oracle(spec, case):
    assert warped.ricci_case_residual(spec, case, _points(spec), require_m_gt_1=False) <= 1e-8


@pytest.mark.parametrize("case", [2, 4, 5])
def test_m1_cases_need_flag(case):
    pts = _points(POLAR, 3)
    with pytest.raises(PreconditionError):
        warped.riemann_case_residual(POLAR, case, pts)
    assert warped.riemann_case_residual(POLAR, case, pts, require_m_gt_1=False) <= 1e-8


@pytest.mark.parametrize("case", [1, 3])
def test_m1_ricci_cases_need_flag(case):
    pts = _points(POLAR, 3)
    with pytest.raises(PreconditionError):
        warped.ricci_case_residual(POLAR, case, pts)
    assert warped.ricci_case_residual(POLAR, case, pts, require_m_gt_1=False) <= 1e-8


def test_m1_cases_without_hypothesis_run():
    pts = _points(POLAR, 3)
    assert warped.riemann_case_residual(POLAR, 1, pts) <= 1e-8
    assert warped.riemann_case_residual(POLAR, 3, pts) <= 1e-8
    assert warped.ricci_case_residual(POLAR, 2, pts) <= 1e-8


def test_closed_form_examples():
    x = [0.2, 0.3, -0.4]
    pt = warped.WarpedPoint(HYP3, x)
    U, V, W = (vertical(HYP3, e) for e in ([1.0, 0.0], [0.0, 1.0], [1.0, 0.5]))
    X = horizontal(HYP3, [1.0])
    assert not np.any(warped.riemann_closed_form(HYP3, 3, x, (X, X, U)))
    got = warped.riemann_closed_form(HYP3, 4, x, (U, V, W))
    g = geometry.metric_at(HYP3.chart, x)
    gt = lambda a, b: a.assembled @ g @ b.assembled  # noqa: E731
    expected = -(gt(U, W) * V.assembled - gt(V, W) * U.assembled)
    assert np.allclose(got, expected, atol=1e-14)
    assert pt.grad_norm_sq / pt.f ** 2 == pytest.approx(1.0)
    assert warped.ricci_closed_form(HYP3, 1, x, (X, X)) == pytest.approx(-2.0, abs=1e-12)
    assert warped.ricci_oracle(HYP3, x, (X, X)) == pytest.approx(-2.0, abs=1e-8)
    assert warped.ricci_closed_form(HYP3, 2, x, (X, U)) == 0.0
    flat_base = warped.riemann_closed_form(POLAR, 1, [1.0, 1.0], (horizontal(POLAR, [1.0]),) * 3)
    assert not np.any(flat_base)


def test_case3_unwarped_reduces_to_fiber_ricci():
    x = [1.0, 2.0, 0.5, 0.1]
    pt = warped.WarpedPoint(S_H, x)
    for a in np.eye(2):
        for b in np.eye(2):
            got = warped.ricci_closed_form(S_H, 3, x, (vertical(S_H, a), vertical(S_H, b)))
            assert got == pytest.approx(a @ pt.fiber.ricci @ b, abs=1e-14)


def test_hyperbolic_space_has_constant_curvature():
    for x in _points(HYP3):
        loc = geometry.local(HYP3.chart, x)
        g = loc.g
        # R(X,Y)Z = K (g(Y,Z)X - g(X,Z)Y) with K = -1 in the oracle convention
        expected = -(np.einsum("jk,li->lkij", g, np.eye(3)) - np.einsum("ik,lj->lkij", g, np.eye(3)))
        assert np.max(np.abs(loc.riemann - expected)) <= 1e-8
        assert np.max(np.abs(loc.ricci + 2 * g)) <= 1e-8


def test_wrong_lift_kinds():
    X = horizontal(HYP3, [1.0])
    U = vertical(HYP3, [1.0, 0.0])
    with pytest.raises(MetwarpError):
        warped.riemann_closed_form(HYP3, 2, [0, 0, 0], (X, U, X))
    with pytest.raises(MetwarpError):
        warped.ricci_closed_form(HYP3, 1, [0, 0, 0], (X, U))
    with pytest.raises(MetwarpError):
        warped.riemann_closed_form(HYP3, 6, [0, 0, 0], (X, X, X))


def test_product_case():
    for spec in (S_LINE, S_H, FLAT_FLAT):
        curv, ric = warped.product_case_residuals(spec, _points(spec))
        assert curv <= 1e-9 and ric <= 1e-9
    assert warped.product_case_residuals(FLAT_FLAT, _points(FLAT_FLAT)) == (0.0, 0.0)
    with pytest.raises(PreconditionError):
        warped.product_case_residuals(POLAR, _points(POLAR))


def test_mixed_christoffel_blocks():
    for spec in SPECS:
        assert warped.mixed_christoffel_residual(spec, _points(spec)) <= 1e-10
    # with a warp the fiber-fiber to base block is present
    gam = geometry.christoffel_at(POLAR.chart, [2.0, 1.0])
    assert gam[0, 1, 1] == pytest.approx(-2.0)
