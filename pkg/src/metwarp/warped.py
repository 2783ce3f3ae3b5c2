"""Warped products ``B x_f F`` and their closed-form connection and curvature.

The closed forms below are written in the curvature sign convention
``R(X, Y) = nabla_[X,Y] - [nabla_X, nabla_Y]``, the opposite of
:mod:`metwarp.geometry`. Only in that convention do the mixed cases (a
vertical and a horizontal slot) hold with the printed signs. Comparisons with
the oracle multiply it by :data:`CURVATURE_SIGN`. Ricci tensors need no
adjustment: both conventions give positive Ricci curvature on spheres.

The metric symbol inside the closed forms is the warped metric
``g~ = g_B + f^2 g_F``. Gradient, Hessian and Laplacian of ``f`` are taken on
the base and lifted.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import exprlang, geometry
from .errors import MetwarpError, PreconditionError
from .exprlang import BinOp, Expression, Num
from .geometry import Chart, LocalGeometry
from .metallic import MetallicParams

CURVATURE_SIGN = -1.0

HORIZONTAL = "horizontal"
VERTICAL = "vertical"

# Cases that the closed forms state under the hypothesis m > 1.
RIEMANN_CASES_NEEDING_M2 = frozenset({2, 4, 5})
RICCI_CASES_NEEDING_M2 = frozenset({1, 3})


@dataclass(frozen=True)
class WarpedProduct:
    base: Chart
    fiber: Chart
    warp: Expression
    name: str = "product"

    def __post_init__(self):
        clash = set(self.base.coords) & set(self.fiber.coords)
        if clash:
            raise MetwarpError(f"base and fiber share coordinates {sorted(clash)}")
        extra = exprlang.free_vars(self.warp) - set(self.base.coords)
        if extra:
            raise MetwarpError(f"warping function uses non-base variables {sorted(extra)}")

    @property
    def n(self) -> int:
        return self.base.dim

    @property
    def m(self) -> int:
        return self.fiber.dim

    @cached_property
    def chart(self) -> Chart:
        return build_warped_chart(self)

    def split(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        return x[: self.n], x[self.n:]

    def join(self, xb, xf) -> np.ndarray:
        return np.concatenate([np.asarray(xb, dtype=float), np.asarray(xf, dtype=float)])

    def warp_at(self, xb, params: MetallicParams | None = None) -> float:
        return exprlang.eval(self.warp, self.base.env(xb), params)

    def is_unwarped(self, params: MetallicParams | None = None) -> bool:
        return exprlang.is_constant(self.warp) and exprlang.eval(self.warp, {}, params) == 1.0


def build_warped_chart(spec: WarpedProduct) -> Chart:
    """Product chart with block metric ``diag(g_B, f^2 g_F)``."""
    n, m = spec.n, spec.m
    zero = Num(0.0)
    f2 = BinOp("^", spec.warp, Num(2.0))
    unwarped = spec.warp == Num(1.0)
    rows = []
    for i in range(n):
        rows.append(tuple(spec.base.metric[i]) + (zero,) * m)
    for a in range(m):
        row = []
        for b in range(m):
            e = spec.fiber.metric[a][b]
            row.append(e if unwarped or e == zero else BinOp("*", f2, e))
        rows.append((zero,) * n + tuple(row))
    return Chart(spec.name, spec.base.coords + spec.fiber.coords,
                 spec.base.domain + spec.fiber.domain, tuple(rows))


def check_warp_positive(spec: WarpedProduct, base_points, params: MetallicParams | None = None) -> float:
    """Smallest warp value over the points; raises if any is not positive."""
    lowest = min((spec.warp_at(xb, params) for xb in base_points), default=1.0)
    if not lowest > 0:
        raise PreconditionError(f"warping function is not positive (min {lowest!r})", lowest)
    return lowest


# -- lifts and projections ------------------------------------------------------

@dataclass(frozen=True)
class LiftedVector:
    kind: str
    underlying: np.ndarray
    assembled: np.ndarray


def horizontal(spec: WarpedProduct, X) -> LiftedVector:
    X = np.asarray(X, dtype=float)
    if X.shape != (spec.n,):
        raise MetwarpError(f"horizontal lift expects {spec.n} components")
    return LiftedVector(HORIZONTAL, X, np.concatenate([X, np.zeros(spec.m)]))


def vertical(spec: WarpedProduct, V) -> LiftedVector:
    V = np.asarray(V, dtype=float)
    if V.shape != (spec.m,):
        raise MetwarpError(f"vertical lift expects {spec.m} components")
    return LiftedVector(VERTICAL, V, np.concatenate([np.zeros(spec.n), V]))


def projections(spec: WarpedProduct, v) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(v, dtype=float)
    return v[: spec.n].copy(), v[spec.n:].copy()


# -- pointwise data ---------------------------------------------------------------

class WarpedPoint:
    """Base, fiber and product geometry at one point of a warped product."""

    def __init__(self, spec: WarpedProduct, x, params: MetallicParams | None = None):
        self.spec = spec
        self.params = params
        self.x = np.asarray(x, dtype=float)
        self.xb, self.xf = spec.split(self.x)
        jet = exprlang.eval_jet2(spec.warp, spec.base.env(self.xb), params, spec.base.coords)
        if not jet.value > 0:
            raise PreconditionError(f"warping function is not positive at {self.xb.tolist()}", jet.value)
        self.f = jet.value
        self.df = jet.gradient

    @cached_property
    def base(self) -> LocalGeometry:
        return geometry.local(self.spec.base, self.xb, self.params)

    @cached_property
    def fiber(self) -> LocalGeometry:
        return geometry.local(self.spec.fiber, self.xf, self.params)

    @cached_property
    def product(self) -> LocalGeometry:
        return geometry.local(self.spec.chart, self.x, self.params)

    @cached_property
    def grad_f(self) -> np.ndarray:
        return self.base.ginv @ self.df

    @cached_property
    def grad_norm_sq(self) -> float:
        return float(self.df @ self.grad_f)

    @cached_property
    def hess_f(self) -> np.ndarray:
        return self.base.hessian(self.spec.warp)

    @cached_property
    def laplacian_f(self) -> float:
        return float(np.einsum("ij,ij->", self.base.ginv, self.hess_f))

    def fiber_inner(self, U, V) -> float:
        """Warped inner product of two fiber vectors, ``f^2 g_F(U, V)``."""
        return self.f ** 2 * float(U @ self.fiber.g @ V)

    def lift_h(self, X) -> np.ndarray:
        return np.concatenate([X, np.zeros(self.spec.m)])

    def lift_v(self, V) -> np.ndarray:
        return np.concatenate([np.zeros(self.spec.n), V])


# -- connection ---------------------------------------------------------------------

def _field_jets(exprs: Sequence[Expression], env, coords, params) -> tuple[np.ndarray, np.ndarray]:
    """Values and ``d[m, k] = d_m Y^k`` of a vector field given by expressions."""
    vals = np.empty(len(exprs))
    d = np.zeros((len(coords), len(exprs)))
    for k, e in enumerate(exprs):
        jet = exprlang.eval_jet2(e, env, params, coords)
        vals[k] = jet.value
        d[:, k] = jet.gradient
    return vals, d


def _check_field(exprs: Sequence[Expression], chart: Chart, what: str) -> None:
    if len(exprs) != chart.dim:
        raise MetwarpError(f"{what} needs {chart.dim} components, got {len(exprs)}")
    allowed = set(chart.coords)
    for e in exprs:
        extra = exprlang.free_vars(e) - allowed
        if extra:
            raise MetwarpError(f"{what} depends on {sorted(extra)} outside {chart.name!r}")


def connection_closed_form(spec: WarpedProduct, x, X, Y1: Sequence[Expression], Y2: Sequence[Expression],
                           params: MetallicParams | None = None) -> np.ndarray:
    """``nabla~_X Y`` for ``Y = (Y1, Y2)`` with ``Y1`` a base field and ``Y2`` a fiber field.

    ``X`` is a tangent vector of the product at ``x``.
    """
    _check_field(Y1, spec.base, "base part of Y")
    _check_field(Y2, spec.fiber, "fiber part of Y")
    pt = WarpedPoint(spec, x, params)
    X1, X2 = projections(spec, X)
    y1, dy1 = _field_jets(Y1, spec.base.env(pt.xb), spec.base.coords, params)
    y2, dy2 = _field_jets(Y2, spec.fiber.env(pt.xf), spec.fiber.coords, params)

    f2 = pt.f ** 2
    grad_f2 = 2 * pt.f * pt.grad_f
    df2 = 2 * pt.f * pt.df
    base_part = pt.base.covariant(X1, y1, dy1) - 0.5 * float(X2 @ pt.fiber.g @ y2) * grad_f2
    fiber_part = (pt.fiber.covariant(X2, y2, dy2)
                  + (df2 @ X1) / (2 * f2) * y2
                  + (df2 @ y1) / (2 * f2) * X2)
    return np.concatenate([base_part, fiber_part])


def connection_oracle(spec: WarpedProduct, x, X, Y1: Sequence[Expression], Y2: Sequence[Expression],
                      params: MetallicParams | None = None) -> np.ndarray:
    """Same quantity from the Christoffel symbols of the assembled chart."""
    chart = spec.chart
    loc = geometry.local(chart, x, params)
    y, dy = _field_jets(list(Y1) + list(Y2), chart.env(loc.x), chart.coords, params)
    return loc.covariant(np.asarray(X, dtype=float), y, dy)


def mixed_christoffel_residual(spec: WarpedProduct, points, params: MetallicParams | None = None) -> float:
    """Largest ``Gamma^fiber_{base,base}`` or ``Gamma^base_{base,fiber}`` component.

    Both blocks vanish for any warp; for ``f = 1`` every mixed block does.
    """
    n = spec.n
    worst = 0.0
    for x in points:
        gam = geometry.christoffel_at(spec.chart, x, params)
        worst = max(worst, float(np.max(np.abs(gam[n:, :n, :n]), initial=0.0)),
                    float(np.max(np.abs(gam[:n, :n, n:]), initial=0.0)),
                    float(np.max(np.abs(gam[:n, n:, :n]), initial=0.0)))
    return worst


# -- curvature closed forms ---------------------------------------------------------------

_RIEMANN_KINDS = {
    1: [(HORIZONTAL, HORIZONTAL, HORIZONTAL)],
    2: [(VERTICAL, HORIZONTAL, HORIZONTAL)],
    3: [(HORIZONTAL, HORIZONTAL, VERTICAL), (VERTICAL, VERTICAL, HORIZONTAL)],
    4: [(VERTICAL, VERTICAL, VERTICAL)],
    5: [(HORIZONTAL, VERTICAL, VERTICAL)],
}

_RICCI_KINDS = {
    1: (HORIZONTAL, HORIZONTAL),
    2: (HORIZONTAL, VERTICAL),
    3: (VERTICAL, VERTICAL),
}


def riemann_case_kinds(case: int) -> list[tuple[str, str, str]]:
    return list(_RIEMANN_KINDS[case])


def ricci_case_kinds(case: int) -> tuple[str, str]:
    return _RICCI_KINDS[case]


def _check_kinds(case: int, vectors: Sequence[LiftedVector], allowed) -> None:
    kinds = tuple(v.kind for v in vectors)
    if kinds not in allowed:
        raise MetwarpError(f"case {case} expects lift kinds {allowed}, got {kinds}")


def _check_m(spec: WarpedProduct, case: int, needing, require_m_gt_1: bool) -> None:
    if require_m_gt_1 and case in needing and spec.m < 2:
        raise PreconditionError(f"case {case} requires a fiber of dimension m>1 (m={spec.m})", spec.m)


def riemann_closed_form(spec: WarpedProduct, case: int, x, vectors: Sequence[LiftedVector],
                        params: MetallicParams | None = None, require_m_gt_1: bool = True,
                        point: WarpedPoint | None = None) -> np.ndarray:
    """Evaluate the closed form for one of the five lift patterns.

    Slot order follows the formula: case 1 ``R(X,Y)Z``, case 2 ``R(U,X)Y``,
    case 3 ``R(X,Y)U`` or ``R(U,V)X``, case 4 ``R(U,V)W``, case 5 ``R(X,U)V``.
    """
    if case not in _RIEMANN_KINDS:
        raise MetwarpError(f"unknown curvature case {case!r}")
    _check_kinds(case, vectors, _RIEMANN_KINDS[case])
    _check_m(spec, case, RIEMANN_CASES_NEEDING_M2, require_m_gt_1)
    pt = point or WarpedPoint(spec, x, params)
    a, b, c = (v.underlying for v in vectors)
    if case == 1:
        return pt.lift_h(CURVATURE_SIGN * pt.base.curvature(a, b, c))
    if case == 2:
        # R(U, X)Y = H(X, Y)/f U
        return pt.lift_v(float(b @ pt.hess_f @ c) / pt.f * a)
    if case == 3:
        return np.zeros(spec.n + spec.m)
    if case == 4:
        coeff = pt.grad_norm_sq / pt.f ** 2
        fiber = CURVATURE_SIGN * pt.fiber.curvature(a, b, c)
        return pt.lift_v(fiber - coeff * (pt.fiber_inner(a, c) * b - pt.fiber_inner(b, c) * a))
    # case 5: R(X, U)V = g~(U, V)/f nabla_X grad f
    nabla_grad = pt.base.ginv @ pt.hess_f @ a
    return pt.lift_h(pt.fiber_inner(b, c) / pt.f * nabla_grad)


def riemann_oracle(spec: WarpedProduct, x, vectors: Sequence[LiftedVector],
                   params: MetallicParams | None = None, point: WarpedPoint | None = None) -> np.ndarray:
    """``R(A, B)C`` from the assembled chart, in the closed-form sign convention."""
    pt = point or WarpedPoint(spec, x, params)
    a, b, c = (v.assembled for v in vectors)
    return CURVATURE_SIGN * pt.product.curvature(a, b, c)


def ricci_closed_form(spec: WarpedProduct, case: int, x, vectors: Sequence[LiftedVector],
                      params: MetallicParams | None = None, require_m_gt_1: bool = True,
                      point: WarpedPoint | None = None) -> float:
    if case not in _RICCI_KINDS:
        raise MetwarpError(f"unknown Ricci case {case!r}")
    _check_kinds(case, vectors, [_RICCI_KINDS[case]])
    _check_m(spec, case, RICCI_CASES_NEEDING_M2, require_m_gt_1)
    pt = point or WarpedPoint(spec, x, params)
    a, b = (v.underlying for v in vectors)
    m = spec.m
    if case == 1:
        return float(a @ pt.base.ricci @ b) - m / pt.f * float(a @ pt.hess_f @ b)
    if case == 2:
        return 0.0
    coeff = pt.laplacian_f / pt.f + (m - 1) * pt.grad_norm_sq / pt.f ** 2
    return float(a @ pt.fiber.ricci @ b) - coeff * pt.fiber_inner(a, b)


def ricci_oracle(spec: WarpedProduct, x, vectors: Sequence[LiftedVector],
                 params: MetallicParams | None = None, point: WarpedPoint | None = None) -> float:
    pt = point or WarpedPoint(spec, x, params)
    a, b = (v.assembled for v in vectors)
    return float(a @ pt.product.ricci @ b)


def _basis_lifts(spec: WarpedProduct, kind: str) -> list[LiftedVector]:
    if kind == HORIZONTAL:
        return [horizontal(spec, e) for e in np.eye(spec.n)]
    return [vertical(spec, e) for e in np.eye(spec.m)]


def riemann_case_residual(spec: WarpedProduct, case: int, points, params: MetallicParams | None = None,
                          require_m_gt_1: bool = True) -> float:
    """Max gap between closed form and oracle over points and all basis inputs."""
    worst = 0.0
    for x in points:
        pt = WarpedPoint(spec, x, params)
        for kinds in _RIEMANN_KINDS[case]:
            lifts = [_basis_lifts(spec, k) for k in kinds]
            for a in lifts[0]:
                for b in lifts[1]:
                    for c in lifts[2]:
                        vecs = (a, b, c)
                        closed = riemann_closed_form(spec, case, x, vecs, params, require_m_gt_1, pt)
                        oracle = riemann_oracle(spec, x, vecs, params, pt)
                        worst = max(worst, float(np.max(np.abs(closed - oracle))))
    return worst


def ricci_case_residual(spec: WarpedProduct, case: int, points, params: MetallicParams | None = None,
                        require_m_gt_1: bool = True) -> float:
    worst = 0.0
    for x in points:
        pt = WarpedPoint(spec, x, params)
        k1, k2 = _RICCI_KINDS[case]
        for a in _basis_lifts(spec, k1):
            for b in _basis_lifts(spec, k2):
                closed = ricci_closed_form(spec, case, x, (a, b), params, require_m_gt_1, pt)
                worst = max(worst, abs(closed - ricci_oracle(spec, x, (a, b), params, pt)))
    return worst


def product_case_residuals(spec: WarpedProduct, points, params: MetallicParams | None = None) -> tuple[float, float]:
    """Block structure of curvature and Ricci on an unwarped product.

    Returns ``(curvature, ricci)`` maxima over the points, comparing the
    assembled chart with factor values on all basis triples and pairs.
    """
    if not spec.is_unwarped(params):
        raise PreconditionError("product-case check needs warp identically 1")
    n = spec.n
    curv = ric = 0.0
    for x in points:
        pt = WarpedPoint(spec, x, params)
        R = pt.product.riemann
        block = np.zeros_like(R)
        block[:n, :n, :n, :n] = pt.base.riemann
        block[n:, n:, n:, n:] = pt.fiber.riemann
        curv = max(curv, float(np.max(np.abs(R - block))))
        S = pt.product.ricci
        sblock = np.zeros_like(S)
        sblock[:n, :n] = pt.base.ricci
        sblock[n:, n:] = pt.fiber.ricci
        ric = max(ric, float(np.max(np.abs(S - sblock))))
    return curv, ric
