import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metwarp import exprlang, geometry, metallic, structures
from metwarp.errors import MetwarpError, MismatchedParamsError, NotMetallicError, PreconditionError
from metwarp.geometry import (chart_from_text, constant_operator, diagonal_operator, euclidean_chart,
                              symbolic_operator)
from metwarp.metallic import GOLDEN, MetallicParams
from metwarp.warped import WarpedProduct, horizontal, vertical

P = exprlang.parse
SILVER = MetallicParams(2, 1)

HALF_LINE = chart_from_text("B", ("u",), ((0.5, 3),), [["1"]])
CIRCLE = chart_from_text("F", ("a",), ((0.1, 6.2),), [["1"]])
POLAR = WarpedProduct(HALF_LINE, CIRCLE, P("u"), "polar")
HYP3 = WarpedProduct(euclidean_chart("T", ("t",), ((-1, 1),)),
                     euclidean_chart("F2", ("x", "y"), ((-1, 1), (-1, 1))), P("exp(t)"), "H3")
SPHERE = chart_from_text("S2", ("th", "ph"), ((0.3, 2.8), (0.1, 6.2)), [["1", "0"], ["0", "sin(th)^2"]])
HYP2 = chart_from_text("H2", ("s", "z"), ((-1, 1), (-1, 1)), [["1", "0"], ["0", "exp(2*s)"]])
LINE = euclidean_chart("L", ("w",), ((-1, 1),))
S_LINE = WarpedProduct(SPHERE, LINE, P("1"), "SL")
S_H = WarpedProduct(SPHERE, HYP2, P("1"), "SH")
FLAT = WarpedProduct(euclidean_chart("A", ("x",), ((-1, 1),)), euclidean_chart("C", ("y",), ((-1, 1),)),
                     P("1"), "AA")
PLANE_BASE = euclidean_chart("B2", ("x", "y"), ((0.5, 1.5), (0.5, 1.5)))
XY = WarpedProduct(PLANE_BASE, euclidean_chart("V2", ("v", "w"), ((-1, 1), (-1, 1))), P("x*y"), "XY")

SPECS = [POLAR, HYP3, S_LINE, S_H, FLAT, XY]


def _points(chart, count=10, seed=9):
    return geometry.sample_points(chart, np.random.default_rng(seed), count)


def _scalar(chart, value, params):
    return diagonal_operator(chart, [value] * chart.dim, params)


def test_F_examples():
    F = structures.product_structure_F(FLAT)
    assert np.array_equal(F.matrix_at([0.1, 0.2]), np.diag([1.0, -1.0]))
    F = structures.product_structure_F(S_LINE)
    x = [1.0, 2.0, 0.3]
    Fm = F.matrix_at(x)
    h = horizontal(S_LINE, [0.5, -0.7]).assembled
    v = vertical(S_LINE, [1.3]).assembled
    assert np.array_equal(Fm @ h, h)
    assert np.array_equal(Fm @ v, -v)
    for spec in SPECS:
        F = structures.product_structure_F(spec)
        for x in _points(spec.chart, 3):
            Fm = F.matrix_at(x)
            g = geometry.metric_at(spec.chart, x)
            assert metallic.almost_product_residual(Fm) == 0.0
            assert np.array_equal(g @ Fm, (g @ Fm).T)


def test_J_pm_examples():
    Jp = structures.J_pm_product(FLAT, 1, GOLDEN)
    M = Jp.matrix_at([0.0, 0.0])
    assert M[0, 0] == pytest.approx(1.6180339887498949, abs=1e-15)
    assert M[1, 1] == pytest.approx(-0.6180339887498949, abs=1e-15)
    assert M[0, 1] == M[1, 0] == 0.0
    for params in (GOLDEN, SILVER, MetallicParams(3, 2)):
        for spec in SPECS:
            x = _points(spec.chart, 1)[0]
            plus = structures.J_pm_product(spec, 1, params).matrix_at(x)
            minus = structures.J_pm_product(spec, -1, params).matrix_at(x)
            assert np.allclose(plus + minus, params.p * np.eye(spec.n + spec.m), atol=1e-14)
            pr = metallic.projectors(plus, params)
            assert np.allclose(pr.m, structures.base_projector(spec), atol=1e-14)
            assert np.allclose(pr.l, structures.fiber_projector(spec), atol=1e-14)
    with pytest.raises(ValueError):
        structures.J_pm_product(FLAT, 0, GOLDEN)


def test_J_pm_matches_induced_from_F():
    for spec in SPECS:
        x = _points(spec.chart, 1)[0]
        Fm = structures.product_structure_F(spec).matrix_at(x)
        for sign in (1, -1):
            J = structures.J_pm_product(spec, sign, SILVER).matrix_at(x)
            assert np.allclose(J, metallic.induced_metallic(Fm, sign, SILVER), atol=1e-14)


def test_J_pair_examples():
    J1 = _scalar(SPHERE, "sigma", GOLDEN)
    J2 = _scalar(HYP2, "sigbar", GOLDEN)
    jt = structures.J_pair(S_H, J1, J2, GOLDEN)
    M = jt.matrix_at([1.0, 2.0, 0.1, 0.2])
    assert np.allclose(M, np.diag([GOLDEN.sigma] * 2 + [GOLDEN.sigbar] * 2), atol=0)
    assert metallic.metallic_residual(M, GOLDEN) <= 1e-15
    same = structures.J_pair(S_H, J1, _scalar(HYP2, "sigma", GOLDEN), GOLDEN)
    assert np.allclose(same.matrix_at([1.0, 2.0, 0.1, 0.2]), GOLDEN.sigma * np.eye(4), atol=0)


def test_J_pair_errors():
    J1 = _scalar(SPHERE, "sigma", GOLDEN)
    with pytest.raises(MismatchedParamsError):
        structures.J_pair(S_H, J1, _scalar(HYP2, "sigma", SILVER), GOLDEN)
    with pytest.raises(NotMetallicError):
        structures.J_pair(S_H, J1, constant_operator(HYP2, np.eye(2)), GOLDEN)
    with pytest.raises(MetwarpError):
        structures.J_pair(S_H, _scalar(HYP2, "sigma", GOLDEN), J1, GOLDEN)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
def test_structure_invariants(spec):
    pts = _points(spec.chart, 50, seed=4)
    bases = [spec.split(x)[0] for x in pts]
    fibers = [spec.split(x)[1] for x in pts]
    J1 = diagonal_operator(spec.base, ["sigma"] + ["sigbar"] * (spec.n - 1), SILVER)
    J2 = diagonal_operator(spec.fiber, ["sigbar"] + ["sigma"] * (spec.m - 1), SILVER)
    for s in (structures.J_pm_product(spec, 1, SILVER), structures.J_pm_product(spec, -1, SILVER),
              structures.J_pair(spec, J1, J2, SILVER, bases, fibers)):
        met, compat = structures.structure_residuals(s, pts)
        assert met <= 1e-10 and compat <= 1e-10


def test_map_residual_examples():
    ident = structures.CoordinateMap(SPHERE, SPHERE, (P("th"), P("ph")))
    J = _scalar(SPHERE, "sigma", GOLDEN)
    assert structures.metallic_map_residual(ident, J, J, GOLDEN, _points(SPHERE)) == 0.0

    J1 = _scalar(SPHERE, "sigma", GOLDEN)
    J2 = _scalar(HYP2, "sigbar", GOLDEN)
    pts = _points(S_H.chart)
    jt = structures.J_pair(S_H, J1, J2, GOLDEN)
    p1, p2 = structures.projection_maps(S_H)
    assert structures.metallic_map_residual(p1, jt.field, J1, GOLDEN, pts) == 0.0
    assert structures.metallic_map_residual(p2, jt.field, J2, GOLDEN, pts) == 0.0

    Jp = structures.J_pm_product(S_H, 1, GOLDEN)
    res = structures.metallic_map_residual(p1, Jp.field, _scalar(SPHERE, "sigbar", GOLDEN), GOLDEN, pts)
    assert res == pytest.approx(GOLDEN.sigma - GOLDEN.sigbar, abs=1e-14)

    with pytest.raises(MetwarpError):
        structures.metallic_map_residual(p1, J1, J1, GOLDEN, pts)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 3.0))
def test_projections_are_metallic_maps_only_for_the_pair(c):
    # J~ = (J1, J2) makes both projections metallic; perturbing off-diagonal blocks breaks it
    J1 = diagonal_operator(SPHERE, ["sigma", "sigbar"], SILVER)
    J2 = diagonal_operator(HYP2, ["sigbar", "sigma"], SILVER)
    jt = structures.J_pair(S_H, J1, J2, SILVER)
    p1, p2 = structures.projection_maps(S_H)
    pts = _points(S_H.chart, 3)
    assert structures.metallic_map_residual(p1, jt.field, J1, SILVER, pts) == 0.0
    assert structures.metallic_map_residual(p2, jt.field, J2, SILVER, pts) == 0.0
    M = jt.matrix_at(pts[0]).copy()
    M[0, 2] = c
    other = constant_operator(S_H.chart, M, SILVER)
    assert structures.metallic_map_residual(p1, other, J1, SILVER, pts[:1]) >= c - 1e-15


def test_locally_metallic_examples():
    pts = _points(FLAT.chart)
    A, C = FLAT.base, FLAT.fiber
    res = structures.locally_metallic_conditions(FLAT, _scalar(A, "sigma", GOLDEN),
                                                 _scalar(C, "sigbar", GOLDEN), GOLDEN, pts)
    assert res == (0.0, 0.0, 0.0)

    pts = _points(POLAR.chart)
    same = structures.locally_metallic_conditions(POLAR, _scalar(HALF_LINE, "sigma", GOLDEN),
                                                  _scalar(CIRCLE, "sigma", GOLDEN), GOLDEN, pts)
    assert max(same) <= 1e-9
    a, b, c = structures.locally_metallic_conditions(POLAR, _scalar(HALF_LINE, "sigma", GOLDEN),
                                                     _scalar(CIRCLE, "sigbar", GOLDEN), GOLDEN, pts)
    assert a > 1e-3 and c > 1e-3
    # under the type-consistent reading (b) carries the factor sigbar - sigma as well
    assert b > 1e-3


def test_locally_metallic_precondition():
    J1 = symbolic_operator(HALF_LINE, [["sigma + u - u^2/2"]], GOLDEN)
    with pytest.raises(PreconditionError):
        structures.locally_metallic_conditions(POLAR, J1, _scalar(CIRCLE, "sigma", GOLDEN), GOLDEN,
                                               _points(POLAR.chart, 3))


@pytest.mark.parametrize("spec", [POLAR, HYP3, XY, S_LINE, S_H], ids=lambda s: s.name)
def test_locally_metallic_equivalence(spec):
    tol = 1e-9
    pts = _points(spec.chart)
    options = [("sigma", "sigma"), ("sigma", "sigbar"), ("sigbar", "sigma"), ("sigbar", "sigbar")]
    for top, bottom in options:
        for params in (GOLDEN, SILVER):
            a, b, c = structures.locally_metallic_conditions(
                spec, _scalar(spec.base, top, params), _scalar(spec.fiber, bottom, params), params, pts)
            cond = max(a, b)
            assert (cond <= tol and c <= tol) or (cond > 10 * tol and c > 10 * tol)


def test_F_parallel_iff_warp_constant():
    for spec in SPECS:
        F = structures.product_structure_F(spec)
        res = geometry.nabla_operator_residual(spec.chart, F, None, _points(spec.chart))
        if spec.is_unwarped():
            assert res <= 1e-12
        else:
            assert res > 1e-3


def test_curvature_identities_flat():
    spec = FLAT
    J = structures.J_pm_product(spec, 1, SILVER)
    res = structures.curvature_identity_residuals(spec.chart, J.field, SILVER, _points(spec.chart))
    assert max(res) == 0.0


def test_curvature_identities_sphere_line():
    def check(params):
        J = structures.J_pm_product(S_LINE, 1, params)
        return structures.curvature_identity_residuals(S_LINE.chart, J.field, params, _points(S_LINE.chart))

    golden = check(GOLDEN)
    assert max(golden) <= 1e-8
    silver = check(SILVER)
    assert max(silver.commutes, silver.symmetric_slots, silver.square_slots, silver.power_slots) <= 1e-8
    assert silver.square_slots_literal > 0.1


def test_curvature_identities_need_parallel_J():
    J = structures.J_pm_product(POLAR, 1, GOLDEN)
    with pytest.raises(PreconditionError):
        structures.curvature_identity_residuals(POLAR.chart, J.field, GOLDEN, _points(POLAR.chart, 3))


def test_fiber_invariance_examples():
    for spec in SPECS:
        pts = _points(spec.chart, 5)
        Jp = structures.J_pm_product(spec, 1, GOLDEN)
        n = spec.n
        for x in pts:
            assert not np.any(Jp.matrix_at(x)[:n, n:])
        scalar = structures.J_pair(spec, _scalar(spec.base, "sigma", GOLDEN),
                                   _scalar(spec.fiber, "sigma", GOLDEN), GOLDEN)
        assert structures.fiber_invariance_residual(spec, scalar, pts) == 0.0
    polar_pts = _points(POLAR.chart)
    assert structures.fiber_invariance_residual(POLAR, structures.J_pm_product(POLAR, 1, GOLDEN),
                                                polar_pts) <= 1e-8
    # on R x_{e^t} R^2 the Hessian of the warp is nonzero and sigma != sigbar
    hyp = structures.fiber_invariance_residual(HYP3, structures.J_pm_product(HYP3, 1, GOLDEN),
                                               _points(HYP3.chart))
    assert hyp > 1e-3


def test_ricci_invariance_examples():
    pts = _points(S_H.chart)
    res = structures.ricci_invariance_residuals(S_H, _scalar(SPHERE, "sigma", GOLDEN),
                                                _scalar(HYP2, "sigbar", GOLDEN), GOLDEN, pts)
    assert max(res) <= 1e-8
    pts = _points(XY.chart)
    hess, _ = structures.ricci_invariance_residuals(XY, _scalar(PLANE_BASE, "sigma", GOLDEN),
                                                    _scalar(XY.fiber, "sigma", GOLDEN), GOLDEN, pts)
    assert hess == 0.0
    J1 = diagonal_operator(PLANE_BASE, ["sigma", "sigbar"], GOLDEN)
    J2 = _scalar(XY.fiber, "sigma", GOLDEN)
    hess, ric = structures.ricci_invariance_residuals(XY, J1, J2, GOLDEN, pts)
    assert hess > 1e-3 and ric > 1e-3
    assert structures.vertical_ricci_defect(XY, J1, J2, GOLDEN, pts) <= 1e-8


def test_ricci_invariance_precondition():
    # base S2 x R is not Einstein; J1 mixing th and r does not commute with its Ricci operator
    base = chart_from_text("S2R", ("th", "ph", "r"), ((0.3, 2.8), (0.1, 6.2), (-1, 1)),
                           [["1", "0", "0"], ["0", "sin(th)^2", "0"], ["0", "0", "1"]])
    spec = WarpedProduct(base, LINE, P("1"), "S2RL")
    c, s = np.cos(0.3), np.sin(0.3)
    sg, sb = GOLDEN.sigma, GOLDEN.sigbar
    block = np.array([[c, -s], [s, c]]) @ np.diag([sg, sb]) @ np.array([[c, s], [-s, c]])
    M = np.array([[block[0, 0], 0, block[0, 1]], [0, sg, 0], [block[1, 0], 0, block[1, 1]]])
    J1 = constant_operator(base, M, GOLDEN)
    with pytest.raises(PreconditionError):
        structures.ricci_invariance_residuals(spec, J1, _scalar(LINE, "sigma", GOLDEN), GOLDEN,
                                              _points(spec.chart, 3))
