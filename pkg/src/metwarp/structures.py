"""Metallic structures on (warped) products and the checks built on them.

Two families are constructed: the structures induced by the block reflection
``F = pi_1 - pi_2`` and the pairwise structure ``(J1, J2)`` from metallic
structures on the two factors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import exprlang, geometry, metallic
from .errors import MetwarpError, MismatchedParamsError, NotMetallicError, PreconditionError
from .exprlang import Const, Expression, Num
from .geometry import Chart, OperatorField
from .metallic import MetallicParams
from .warped import WarpedPoint, WarpedProduct

PARALLEL_TOL = 1e-9
RICCI_COMMUTE_TOL = 1e-8
STRUCTURE_TOL = 1e-10

PLUS = "J+"
MINUS = "J-"
PAIR = "pair"


@dataclass(frozen=True)
class ProductMetallicStructure:
    variant: str
    params: MetallicParams
    field: OperatorField
    sign: int = 0
    factors: tuple[OperatorField, OperatorField] | None = None

    def matrix_at(self, x) -> np.ndarray:
        return self.field.matrix_at(x, self.params)


@dataclass(frozen=True)
class CoordinateMap:
    source: Chart
    target: Chart
    components: tuple[Expression, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) != self.target.dim:
            raise MetwarpError(
                f"map into {self.target.name!r} needs {self.target.dim} components, got {len(self.components)}")
        allowed = set(self.source.coords)
        for e in self.components:
            extra = exprlang.free_vars(e) - allowed
            if extra:
                raise MetwarpError(f"map component uses {sorted(extra)} outside {self.source.name!r}")

    def value_and_jacobian(self, x, params: MetallicParams | None = None) -> tuple[np.ndarray, np.ndarray]:
        env = self.source.env(x)
        value = np.empty(self.target.dim)
        jac = np.empty((self.target.dim, self.source.dim))
        for r, e in enumerate(self.components):
            jet = exprlang.eval_jet2(e, env, params, self.source.coords)
            value[r] = jet.value
            jac[r] = jet.gradient
        return value, jac


def _block_diagonal(n: int, m: int, top: Expression, bottom: Expression) -> tuple[tuple[Expression, ...], ...]:
    zero = Num(0.0)
    d = n + m
    return tuple(
        tuple((top if i < n else bottom) if i == j else zero for j in range(d))
        for i in range(d)
    )


def product_structure_F(spec: WarpedProduct) -> OperatorField:
    """Block reflection ``diag(I_n, -I_m)``."""
    return OperatorField(spec.chart, _block_diagonal(spec.n, spec.m, Num(1.0), exprlang.num(-1.0)))


def J_pm_product(spec: WarpedProduct, sign: int, params: MetallicParams) -> ProductMetallicStructure:
    """``±(2σ-p)/2 F + p/2 I``: ``diag(σ I_n, σ̄ I_m)`` for ``+`` and swapped for ``-``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    top, bottom = (Const("sigma"), Const("sigbar")) if sign == 1 else (Const("sigbar"), Const("sigma"))
    entries = _block_diagonal(spec.n, spec.m, top, bottom)
    return ProductMetallicStructure(PLUS if sign == 1 else MINUS, params,
                                    OperatorField(spec.chart, entries, params), sign)


def base_projector(spec: WarpedProduct) -> np.ndarray:
    return np.diag([1.0] * spec.n + [0.0] * spec.m)


def fiber_projector(spec: WarpedProduct) -> np.ndarray:
    return np.diag([0.0] * spec.n + [1.0] * spec.m)


def _max_metallic_residual(J: OperatorField, params: MetallicParams, points) -> float:
    return max((metallic.metallic_residual(J.matrix_at(x, params), params) for x in points), default=0.0)


def _max_compat_residual(J: OperatorField, params: MetallicParams | None, points) -> float:
    worst = 0.0
    for x in points:
        g = geometry.metric_at(J.chart, x, params)
        worst = max(worst, metallic.compatibility_residual(J.matrix_at(x, params), g, params))
    return worst


def J_pair(spec: WarpedProduct, J1: OperatorField, J2: OperatorField, params: MetallicParams,
           base_points: Sequence[np.ndarray] = (), fiber_points: Sequence[np.ndarray] = ()) -> ProductMetallicStructure:
    """``(J1 X, J2 Y)`` on the product.

    Both factors must be metallic for ``params``; this is checked at the given
    sample points of each factor (and at the domain midpoint when none are given).
    """
    if J1.chart != spec.base or J2.chart != spec.fiber:
        raise MetwarpError("J1 must live on the base and J2 on the fiber")
    for name, J in (("J1", J1), ("J2", J2)):
        if J.params is not None and J.params != params:
            raise MismatchedParamsError(
                f"{name} is declared for (p,q)=({J.params.p},{J.params.q}), "
                f"expected ({params.p},{params.q})")
    for name, J, pts in (("J1", J1, base_points), ("J2", J2, fiber_points)):
        pts = list(pts) or [_midpoint(J.chart)]
        res = _max_metallic_residual(J, params, pts)
        if res > STRUCTURE_TOL:
            raise NotMetallicError(
                f"{name} is not metallic for (p,q)=({params.p},{params.q}) (residual {res:.3g})")
    n, m = spec.n, spec.m
    zero = Num(0.0)
    rows = []
    for i in range(n):
        rows.append(tuple(J1.entries[i]) + (zero,) * m)
    for a in range(m):
        rows.append((zero,) * n + tuple(J2.entries[a]))
    return ProductMetallicStructure(PAIR, params, OperatorField(spec.chart, tuple(rows), params),
                                    factors=(J1, J2))


def _midpoint(chart: Chart) -> np.ndarray:
    return np.array([(a + b) / 2 for a, b in chart.domain])


def structure_residuals(structure: ProductMetallicStructure, points) -> tuple[float, float]:
    """``(metallic, compatibility)`` maxima of an assembled structure."""
    return (_max_metallic_residual(structure.field, structure.params, points),
            _max_compat_residual(structure.field, structure.params, points))


# -- metallic maps -----------------------------------------------------------------------

def metallic_map_residual(phi: CoordinateMap, J1: OperatorField, J2: OperatorField,
                          params: MetallicParams, points) -> float:
    """Max of ``|DΦ J1(x) - J2(Φ(x)) DΦ|`` over source points."""
    if J1.chart.dim != phi.source.dim or J2.chart.dim != phi.target.dim:
        raise MetwarpError("dimension mismatch between map and structures")
    worst = 0.0
    for x in points:
        y, D = phi.value_and_jacobian(x, params)
        lhs = D @ J1.matrix_at(x, params)
        rhs = J2.matrix_at(y, params) @ D
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def projection_maps(spec: WarpedProduct) -> tuple[CoordinateMap, CoordinateMap]:
    """The coordinate projections of the product onto base and fiber."""
    chart = spec.chart
    p1 = CoordinateMap(chart, spec.base, tuple(exprlang.Var(c) for c in spec.base.coords))
    p2 = CoordinateMap(chart, spec.fiber, tuple(exprlang.Var(c) for c in spec.fiber.coords))
    return p1, p2


# -- locally metallic conditions --------------------------------------------------------------

def _require_parallel(J: OperatorField, params: MetallicParams, points, name: str) -> None:
    res = geometry.nabla_operator_residual(J.chart, J, params, points)
    if res > PARALLEL_TOL:
        raise PreconditionError(f"{name} is not parallel on {J.chart.name!r} (residual {res:.3g})", res)


def locally_metallic_conditions(spec: WarpedProduct, J1: OperatorField, J2: OperatorField,
                                params: MetallicParams, points) -> tuple[float, float, float]:
    """Residuals of the two warp conditions and of ``nabla~ J~`` itself.

    ``points`` are points of the product chart. Returns ``(a, b, c)``:

    * ``a``: ``df²(J1 X) V - df²(X) J2 V`` over basis ``X``, ``V``;
    * ``b``: ``g2(V, J2 W) grad f² - g2(V, W) J1 grad f²`` over basis ``V``, ``W``;
    * ``c``: ``|nabla~ J~|`` computed on the assembled chart.

    Given parallel factors, ``a = b = 0`` exactly when ``c = 0``.
    """
    points = [np.asarray(x, dtype=float) for x in points]
    base_pts = [spec.split(x)[0] for x in points]
    fiber_pts = [spec.split(x)[1] for x in points]
    _require_parallel(J1, params, base_pts, "J1")
    _require_parallel(J2, params, fiber_pts, "J2")
    jt = J_pair(spec, J1, J2, params, base_pts[:1], fiber_pts[:1])

    a = b = 0.0
    for x in points:
        pt = WarpedPoint(spec, x, params)
        j1 = J1.matrix_at(pt.xb, params)
        j2 = J2.matrix_at(pt.xf, params)
        df2 = 2 * pt.f * pt.df
        grad_f2 = 2 * pt.f * pt.grad_f
        eye_m = np.eye(spec.m)
        # cond_a[i, :, v] = df²(J1 e_i) e_v - df²(e_i) J2 e_v
        cond_a = np.einsum("i,kv->ikv", j1.T @ df2, eye_m) - np.einsum("i,kv->ikv", df2, j2)
        g2 = pt.fiber.g
        cond_b = (np.einsum("vw,k->vwk", g2 @ j2, grad_f2)
                  - np.einsum("vw,k->vwk", g2, j1 @ grad_f2))
        a = max(a, float(np.max(np.abs(cond_a))))
        b = max(b, float(np.max(np.abs(cond_b))))
    c = geometry.nabla_operator_residual(spec.chart, jt.field, params, points)
    return a, b, c


# -- curvature identities --------------------------------------------------------------------

class CurvatureIdentityResiduals(NamedTuple):
    commutes: float             # R(X,Y)JZ = J R(X,Y)Z
    symmetric_slots: float      # R(JX,Y) = R(X,JY)
    square_slots: float         # R(JX,JY) = p R(JX,Y) + q R(X,Y)
    power_slots: float          # R(J^{k+1}X,Y) = g_{k+1} R(JX,Y) + q g_k R(X,Y)
    square_slots_literal: float  # coefficients as printed: q R(JX,Y) + p R(X,Y)
    power_slots_literal: float   # constant coefficient g_k without the factor q


def curvature_identity_residuals(chart: Chart, J: OperatorField, params: MetallicParams, points,
                                 n_max: int = 8) -> CurvatureIdentityResiduals:
    """Curvature identities of a parallel metallic structure, over all basis inputs.

    Raises :class:`PreconditionError` when ``J`` is not parallel.
    """
    _require_parallel(J, params, points, "J")
    p, q = params.p, params.q
    worst = np.zeros(6)
    for x in points:
        R = geometry.riemann_at(chart, x, params)  # R[l, k, i, j]
        M = J.matrix_at(x, params)
        # Slot substitutions: R(JX, Y) and R(X, JY) as tensors in (l, k, i, j).
        RJx = np.einsum("lkaj,ai->lkij", R, M)
        RJy = np.einsum("lkia,aj->lkij", R, M)
        RJJ = np.einsum("lkab,ai,bj->lkij", R, M, M)
        commutes = np.einsum("lkij,km->lmij", R, M) - np.einsum("lk,kmij->lmij", M, R)
        res = [
            np.abs(commutes).max(),
            np.abs(RJx - RJy).max(),
            np.abs(RJJ - (p * RJx + q * R)).max(),
            0.0,
            np.abs(RJJ - (q * RJx + p * R)).max(),
            0.0,
        ]
        for k in range(1, n_max + 1):
            Mk = metallic.matrix_power(M, k + 1)
            lhs = np.einsum("lkaj,ai->lkij", R, Mk)
            for slot, literal in ((3, False), (5, True)):
                a, b = metallic.power_coefficients(params, k, literal)
                res[slot] = max(res[slot], float(np.abs(lhs - (a * RJx + b * R)).max()))
        worst = np.maximum(worst, res)
    return CurvatureIdentityResiduals(*(float(v) for v in worst))


# -- invariance checks -------------------------------------------------------------------------

def fiber_invariance_residual(spec: WarpedProduct, structure: ProductMetallicStructure, points) -> float:
    """Vertical distribution invariance and the Hessian relation, folded by max.

    (i) base components of ``J~ V`` for vertical basis vectors;
    (ii) ``|H(X,Y) J~U - H(J~X, Y) U|`` over basis ``X, Y`` horizontal and ``U`` vertical.
    """
    n = spec.n
    worst = 0.0
    for x in points:
        pt = WarpedPoint(spec, x, structure.params)
        Jt = structure.matrix_at(pt.x)
        leak = float(np.max(np.abs(Jt[:n, n:]), initial=0.0))
        H = pt.hess_f
        # H(J~X, Y) only sees the base component of J~X.
        HJ = Jt[:n, :n].T @ H
        JU = Jt[:, n:]  # columns are J~ applied to vertical basis vectors
        U = np.vstack([np.zeros((n, spec.m)), np.eye(spec.m)])
        rel = np.einsum("ij,ku->ijku", H, JU) - np.einsum("ij,ku->ijku", HJ, U)
        worst = max(worst, leak, float(np.max(np.abs(rel))))
    return worst


def ricci_operator_commutator(chart: Chart, J: OperatorField, params: MetallicParams, points) -> tuple[float, float]:
    """``(|QJ - JQ|, |S(J., .) - S(., J.)|)`` with ``Q`` the index-raised Ricci tensor."""
    comm = sym = 0.0
    for x in points:
        loc = geometry.local(chart, x, params)
        S = loc.ricci
        Q = loc.ginv @ S
        M = J.matrix_at(x, params)
        comm = max(comm, float(np.max(np.abs(Q @ M - M @ Q))))
        sym = max(sym, float(np.max(np.abs(M.T @ S - S @ M))))
    return comm, sym


def _ricci_defect_matrix(pt: WarpedPoint, Jt: np.ndarray) -> np.ndarray:
    S = pt.product.ricci
    # entry (v, w) = S(J~ e_v, e_w) - S(e_v, J~ e_w)
    return Jt.T @ S - S @ Jt


def _check_factor_ricci(spec: WarpedProduct, J1, J2, params, points) -> None:
    base_pts = [spec.split(x)[0] for x in points]
    fiber_pts = [spec.split(x)[1] for x in points]
    for name, chart, J, pts in (("J1", spec.base, J1, base_pts), ("J2", spec.fiber, J2, fiber_pts)):
        comm, sym = ricci_operator_commutator(chart, J, params, pts)
        worst = max(comm, sym)
        if worst > RICCI_COMMUTE_TOL:
            raise PreconditionError(
                f"Ricci tensor of {chart.name!r} is not {name}-invariant (residual {worst:.3g})", worst)


def ricci_invariance_residuals(spec: WarpedProduct, J1: OperatorField, J2: OperatorField,
                               params: MetallicParams, points) -> tuple[float, float]:
    """``(hessian_defect, ricci_defect)`` over product points.

    ``hessian_defect`` is ``max |Hess f(J1 X, Y) - Hess f(X, J1 Y)|`` over base
    basis pairs; ``ricci_defect`` is ``max |S~(J~V, W) - S~(V, J~W)|`` over all
    product basis pairs, with ``S~`` from the assembled chart.
    """
    points = [np.asarray(x, dtype=float) for x in points]
    _check_factor_ricci(spec, J1, J2, params, points)
    jt = J_pair(spec, J1, J2, params, [spec.split(points[0])[0]] if points else (),
                [spec.split(points[0])[1]] if points else ())
    hess = ric = 0.0
    for x in points:
        pt = WarpedPoint(spec, x, params)
        j1 = J1.matrix_at(pt.xb, params)
        H = pt.hess_f
        hess = max(hess, float(np.max(np.abs(j1.T @ H - H @ j1))))
        ric = max(ric, float(np.max(np.abs(_ricci_defect_matrix(pt, jt.matrix_at(x))))))
    return hess, ric


def vertical_ricci_defect(spec: WarpedProduct, J1: OperatorField, J2: OperatorField,
                          params: MetallicParams, points) -> float:
    """``max |S~(J~V, W) - S~(V, J~W)|`` restricted to vertical basis pairs."""
    points = [np.asarray(x, dtype=float) for x in points]
    _check_factor_ricci(spec, J1, J2, params, points)
    jt = J_pair(spec, J1, J2, params, [spec.split(points[0])[0]] if points else (),
                [spec.split(points[0])[1]] if points else ())
    n = spec.n
    worst = 0.0
    for x in points:
        pt = WarpedPoint(spec, x, params)
        D = _ricci_defect_matrix(pt, jt.matrix_at(x))
        worst = max(worst, float(np.max(np.abs(D[n:, n:]))))
    return worst
