"""Brute-force tensor calculus on coordinate charts.

Everything is derived from the metric-component expressions: jets of the
metric give Christoffel symbols and their first derivatives, which give the
Riemann and Ricci tensors. No closed-form geometry enters here, so these
routines act as the oracle for the warped-product formulas.

Index conventions (0-based arrays)::

    dg[m, i, j]        = d_m g_ij
    gamma[k, i, j]     = Gamma^k_ij
    dgamma[m, k, i, j] = d_m Gamma^k_ij
    riemann[l, k, i, j] = R^l_kij  with  R(d_i, d_j) d_k = R^l_kij d_l

and ``R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``,
``S(X, Y) = trace(Z -> R(Z, X) Y)``. With these the unit sphere has
sectional curvature +1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import exprlang
from .errors import DegenerateMetricError, MetwarpError
from .exprlang import Expression
from .metallic import MetallicParams

SYMMETRY_TOL = 1e-12
SAMPLE_MARGIN = 1e-6


@dataclass(frozen=True)
class Chart:
    """Coordinate chart with a sampling box and a metric of expressions."""

    name: str
    coords: tuple[str, ...]
    domain: tuple[tuple[float, float], ...]
    metric: tuple[tuple[Expression, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "domain", tuple((float(a), float(b)) for a, b in self.domain))
        object.__setattr__(self, "metric", tuple(tuple(row) for row in self.metric))
        d = len(self.coords)
        if d == 0:
            raise MetwarpError(f"chart {self.name!r} has no coordinates")
        if len(set(self.coords)) != d:
            raise MetwarpError(f"chart {self.name!r} repeats a coordinate name")
        if len(self.domain) != d:
            raise MetwarpError(f"chart {self.name!r}: {len(self.domain)} domain intervals for {d} coordinates")
        for name, (lo, hi) in zip(self.coords, self.domain):
            if not lo < hi:
                raise MetwarpError(f"chart {self.name!r}: empty domain for {name} ({lo} >= {hi})")
        if len(self.metric) != d or any(len(row) != d for row in self.metric):
            raise MetwarpError(f"chart {self.name!r}: metric must be {d}x{d}")
        allowed = set(self.coords)
        for row in self.metric:
            for entry in row:
                extra = exprlang.free_vars(entry) - allowed
                if extra:
                    raise MetwarpError(
                        f"chart {self.name!r}: metric uses unknown variables {sorted(extra)}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def env(self, x: Sequence[float]) -> dict[str, float]:
        return dict(zip(self.coords, (float(v) for v in x)))

    def sample_point(self, rng: np.random.Generator, margin: float = SAMPLE_MARGIN) -> np.ndarray:
        """Uniform point of the domain box, kept ``margin`` away from its faces."""
        lo = np.array([a for a, _ in self.domain])
        hi = np.array([b for _, b in self.domain])
        pad = np.minimum(margin, (hi - lo) / 4)
        return lo + pad + rng.random(self.dim) * (hi - lo - 2 * pad)


def euclidean_chart(name: str, coords: Sequence[str], domain) -> Chart:
    d = len(coords)
    metric = [[exprlang.Num(1.0 if i == j else 0.0) for j in range(d)] for i in range(d)]
    return Chart(name, tuple(coords), tuple(domain), tuple(tuple(r) for r in metric))


def chart_from_text(name: str, coords: Sequence[str], domain, metric: Sequence[Sequence[str]]) -> Chart:
    return Chart(name, tuple(coords), tuple(domain),
                 tuple(tuple(exprlang.parse(e) for e in row) for row in metric))


@dataclass(frozen=True)
class OperatorField:
    """(1,1)-tensor field given by a matrix of expressions on a chart.

    ``params`` records the metallic parameters the field was declared with;
    it is optional and only consulted for consistency checks.
    """

    chart: Chart
    entries: tuple[tuple[Expression, ...], ...]
    params: MetallicParams | None = None

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(tuple(row) for row in self.entries))
        d = self.chart.dim
        if len(self.entries) != d or any(len(row) != d for row in self.entries):
            raise MetwarpError(f"operator on {self.chart.name!r} must be {d}x{d}")
        allowed = set(self.chart.coords)
        for row in self.entries:
            for entry in row:
                extra = exprlang.free_vars(entry) - allowed
                if extra:
                    raise MetwarpError(
                        f"operator on {self.chart.name!r} uses unknown variables {sorted(extra)}")

    def matrix_at(self, x, params: MetallicParams | None = None) -> np.ndarray:
        params = params or self.params
        env = self.chart.env(x)
        return np.array([[exprlang.eval(e, env, params) for e in row] for row in self.entries])

    def jet_at(self, x, params: MetallicParams | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(J, dJ)`` with ``dJ[m, k, j] = d_m J^k_j``."""
        params = params or self.params
        chart = self.chart
        d = chart.dim
        env = chart.env(x)
        J = np.empty((d, d))
        dJ = np.zeros((d, d, d))
        for k, row in enumerate(self.entries):
            for j, e in enumerate(row):
                if exprlang.is_constant(e):
                    J[k, j] = exprlang.eval(e, env, params)
                    continue
                jet = exprlang.eval_jet2(e, env, params, chart.coords)
                J[k, j] = jet.value
                dJ[:, k, j] = jet.gradient
        return J, dJ


def constant_operator(chart: Chart, matrix, params: MetallicParams | None = None) -> OperatorField:
    """Operator field with constant numeric entries."""
    m = np.asarray(matrix, dtype=float)
    return OperatorField(chart, tuple(tuple(exprlang.num(v) for v in row) for row in m), params)


def symbolic_operator(chart: Chart, entries: Sequence[Sequence[str]],
                      params: MetallicParams | None = None) -> OperatorField:
    return OperatorField(chart, tuple(tuple(exprlang.parse(e) for e in row) for row in entries), params)


def diagonal_operator(chart: Chart, diagonal: Sequence[str], params: MetallicParams | None = None) -> OperatorField:
    d = chart.dim
    rows = [[diagonal[i] if i == j else "0" for j in range(d)] for i in range(d)]
    return symbolic_operator(chart, rows, params)


# -- local geometry -------------------------------------------------------------

def metric_jets(chart: Chart, x, params: MetallicParams | None = None):
    """Metric value, first and second derivatives at ``x``.

    Returns ``(g, dg, ddg)`` with ``dg[m, i, j]`` and ``ddg[a, b, i, j]``.
    """
    d = chart.dim
    env = chart.env(x)
    g = np.empty((d, d))
    dg = np.zeros((d, d, d))
    ddg = np.zeros((d, d, d, d))
    for i in range(d):
        for j in range(i, d):
            e = chart.metric[i][j]
            if exprlang.is_constant(e):
                v = exprlang.eval(e, env, params)
                g[i, j] = g[j, i] = v
            else:
                jet = exprlang.eval_jet2(e, env, params, chart.coords)
                g[i, j] = g[j, i] = jet.value
                dg[:, i, j] = dg[:, j, i] = jet.gradient
                ddg[:, :, i, j] = ddg[:, :, j, i] = jet.hessian
            if j != i and chart.metric[j][i] != e:
                other = exprlang.eval(chart.metric[j][i], env, params)
                if abs(other - g[i, j]) > SYMMETRY_TOL:
                    raise MetwarpError(
                        f"metric of {chart.name!r} is not symmetric at {list(x)}: "
                        f"g[{i}][{j}]={g[i, j]!r}, g[{j}][{i}]={other!r}")
    return g, dg, ddg


@dataclass
class LocalGeometry:
    """All curvature data of a chart at one point, computed on demand."""

    chart: Chart
    x: np.ndarray
    params: MetallicParams | None = None
    g: np.ndarray = field(init=False)
    dg: np.ndarray = field(init=False)
    ddg: np.ndarray = field(init=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.g, self.dg, self.ddg = metric_jets(self.chart, self.x, self.params)
        try:
            np.linalg.cholesky(self.g)
        except np.linalg.LinAlgError:
            raise DegenerateMetricError(
                f"metric of {self.chart.name!r} is not positive definite at {self.x.tolist()}") from None

    @cached_property
    def ginv(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    @cached_property
    def _first_kind(self) -> np.ndarray:
        # A[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
        dg = self.dg
        return dg.transpose(2, 0, 1) + dg.transpose(1, 2, 0) - dg

    @cached_property
    def gamma(self) -> np.ndarray:
        return 0.5 * np.einsum("kl,lij->kij", self.ginv, self._first_kind)

    @cached_property
    def dgamma(self) -> np.ndarray:
        ginv = self.ginv
        # d_m g^{kl} = -g^{ka} d_m g_ab g^{bl}
        dginv = -np.einsum("ka,mab,bl->mkl", ginv, self.dg, ginv)
        ddg = self.ddg
        # d_m A[l, i, j] = d_m d_i g_jl + d_m d_j g_il - d_m d_l g_ij
        dA = ddg.transpose(0, 3, 1, 2) + ddg.transpose(0, 2, 3, 1) - ddg
        return 0.5 * (np.einsum("mkl,lij->mkij", dginv, self._first_kind)
                      + np.einsum("kl,mlij->mkij", ginv, dA))

    @cached_property
    def riemann(self) -> np.ndarray:
        gam = self.gamma
        # C[l, k, i, j] = d_i Gamma^l_jk + Gamma^l_im Gamma^m_jk; R = C - C with i<->j.
        c = np.einsum("iljk->lkij", self.dgamma) + np.einsum("lim,mjk->lkij", gam, gam)
        return c - c.transpose(0, 1, 3, 2)

    @cached_property
    def ricci(self) -> np.ndarray:
        # S[b, k] = sum_a R^a_kab
        return np.einsum("akab->bk", self.riemann)

    def curvature(self, X, Y, Z) -> np.ndarray:
        """``R(X, Y) Z`` as a vector."""
        return np.einsum("lkij,k,i,j->l", self.riemann, Z, X, Y)

    def curvature_operator(self, X, Y) -> np.ndarray:
        """Matrix of ``Z -> R(X, Y) Z``."""
        return np.einsum("lkij,i,j->lk", self.riemann, X, Y)

    def lowered(self, X, Y, Z, W) -> float:
        """``g(R(X, Y) Z, W)``."""
        return float(self.curvature(X, Y, Z) @ self.g @ W)

    def sectional(self, X, Y) -> float:
        g = self.g
        area = (X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2
        return self.lowered(X, Y, Y, X) / area

    def covariant(self, X, Y, dY) -> np.ndarray:
        """``nabla_X Y`` given ``Y`` and ``dY[m, k] = d_m Y^k`` at the point."""
        return X @ dY + np.einsum("kij,i,j->k", self.gamma, X, Y)

    def metric_compatibility(self) -> float:
        """``max |nabla_i g_jk|``; zero up to rounding for a Levi-Civita connection."""
        gam, g = self.gamma, self.g
        nabla = self.dg - np.einsum("lij,lk->ijk", gam, g) - np.einsum("lik,jl->ijk", gam, g)
        return float(np.max(np.abs(nabla)))

    def scalar_jet(self, phi: Expression):
        jet = exprlang.eval_jet2(phi, self.chart.env(self.x), self.params, self.chart.coords)
        return jet

    def gradient(self, phi: Expression) -> np.ndarray:
        return self.ginv @ self.scalar_jet(phi).gradient

    def hessian(self, phi: Expression) -> np.ndarray:
        jet = self.scalar_jet(phi)
        return jet.hessian - np.einsum("kij,k->ij", self.gamma, jet.gradient)

    def laplacian(self, phi: Expression) -> float:
        return float(np.einsum("ij,ij->", self.ginv, self.hessian(phi)))

    def nabla_operator(self, J: np.ndarray, dJ: np.ndarray) -> np.ndarray:
        """``N[i, k, j] = (nabla_i J)^k_j``."""
        gam = self.gamma
        # Gamma_i as the matrix (Gamma^k_ij)_{k,j}
        gi = gam.transpose(1, 0, 2)
        return dJ + np.einsum("ikl,lj->ikj", gi, J) - np.einsum("kl,ilj->ikj", J, gi)


def local(chart: Chart, x, params: MetallicParams | None = None) -> LocalGeometry:
    return LocalGeometry(chart, x, params)


def metric_at(chart: Chart, x, params: MetallicParams | None = None) -> np.ndarray:
    return local(chart, x, params).g


def christoffel_at(chart: Chart, x, params: MetallicParams | None = None) -> np.ndarray:
    return local(chart, x, params).gamma


def riemann_at(chart: Chart, x, params: MetallicParams | None = None) -> np.ndarray:
    return local(chart, x, params).riemann


def ricci_at(chart: Chart, x, params: MetallicParams | None = None) -> np.ndarray:
    return local(chart, x, params).ricci


def gradient_at(chart: Chart, phi: Expression, x, params: MetallicParams | None = None) -> np.ndarray:
    return local(chart, x, params).gradient(phi)


def grad_norm_sq_at(chart: Chart, phi: Expression, x, params: MetallicParams | None = None) -> float:
    loc = local(chart, x, params)
    dphi = loc.scalar_jet(phi).gradient
    return float(dphi @ loc.ginv @ dphi)


def hessian_at(chart: Chart, phi: Expression, x, params: MetallicParams | None = None) -> np.ndarray:
    return local(chart, x, params).hessian(phi)


def laplacian_at(chart: Chart, phi: Expression, x, params: MetallicParams | None = None) -> float:
    return local(chart, x, params).laplacian(phi)


def nabla_operator_at(chart: Chart, J: OperatorField, x, params: MetallicParams | None = None) -> float:
    if J.chart != chart:
        raise MetwarpError(f"operator lives on {J.chart.name!r}, not {chart.name!r}")
    loc = local(chart, x, params)
    m, dm = J.jet_at(x, params)
    return float(np.max(np.abs(loc.nabla_operator(m, dm))))


def nabla_operator_residual(chart: Chart, J: OperatorField, params: MetallicParams | None,
                            points: Sequence[np.ndarray]) -> float:
    """Max of ``|nabla_i J|`` over the sample points and all directions."""
    return max((nabla_operator_at(chart, J, x, params) for x in points), default=0.0)


def sample_points(chart: Chart, rng: np.random.Generator, count: int) -> list[np.ndarray]:
    return [chart.sample_point(rng) for _ in range(count)]
