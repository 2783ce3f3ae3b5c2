"""Named verification suites run against a loaded spec file.

Every suite returns a :class:`Report`. Records are keyed ``<suite>.<check>``;
a check that cannot run becomes a failed record carrying the reason, so a
suite never produces an empty result.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import example3 as ex3
from . import exprlang, geometry, metallic, structures, warped
from .errors import MetwarpError, MismatchedParamsError, PreconditionError
from .geometry import Chart, OperatorField
from .metallic import MetallicParams
from .report import Record, Report, failed, measured, skipped
from .sampling import Sampler

DEFAULT_TOLERANCES: dict[str, float] = {
    "algebraic": 1e-12,
    "conjugation": 1e-10,
    "oracle-curvature": 1e-8,
    "oracle-exact": 1e-9,
    "parallel": 1e-9,
    "power": 1e-8,
    "value": 1e-9,
    "leaves": 1e-10,
    "product": 1e-9,
    "finite-difference": 1e-5,
}

FD_STEP = 1e-4


class SuiteError(MetwarpError):
    """Bad suite name, parameter or tolerance key."""


def merge_tolerances(overrides: Mapping[str, float] | None) -> dict[str, float]:
    tol = dict(DEFAULT_TOLERANCES)
    for key, value in (overrides or {}).items():
        if key not in tol:
            raise SuiteError(f"unknown tolerance key {key!r}; known: {', '.join(sorted(tol))}")
        value = float(value)
        if not value >= 0:
            raise SuiteError(f"tolerance {key} must be a nonnegative number")
        tol[key] = value
    return tol


@dataclass
class Ctx:
    spec: object  # SpecFile; typed loosely to avoid an import cycle
    suite: str
    seed: int
    samples: int
    tol: dict[str, float]
    params: dict[str, str]
    pool: ThreadPoolExecutor | None = None
    sampler: Sampler = field(init=False)

    def __post_init__(self):
        self.sampler = Sampler(self.seed)

    def cid(self, name: str) -> str:
        return f"{self.suite}.{name}"

    def map(self, fn: Callable, items: Sequence) -> list:
        if self.pool is None:
            return [fn(it) for it in items]
        return list(self.pool.map(fn, items))

    def points(self, chart: Chart, check_id: str, count: int | None = None) -> list[np.ndarray]:
        return self.sampler.points(chart, check_id, self.samples if count is None else count)

    def over_samples(self, check_id: str, chart: Chart, fn: Callable[[np.ndarray], object]) -> np.ndarray:
        """Elementwise max of ``fn`` over the check's sample points."""
        vals = [np.atleast_1d(np.asarray(v, dtype=float)) for v in self.map(fn, self.points(chart, check_id))]
        return np.max(np.array(vals), axis=0)

    # -- suite parameters

    def get(self, key: str, default: str | None = None) -> str | None:
        return self.params.get(key, default)

    def get_int(self, key: str, default: int) -> int:
        raw = self.params.get(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise SuiteError(f"suite {self.suite}: {key} must be an integer, got {raw!r}") from None

    def get_list(self, key: str) -> list[str] | None:
        raw = self.params.get(key)
        if raw is None:
            return None
        return [s.strip() for s in raw.split(",") if s.strip()]

    def get_range(self, key: str, default: Sequence[int]) -> list[int]:
        raw = self.params.get(key)
        if raw is None:
            return list(default)
        out: list[int] = []
        try:
            for part in raw.split(","):
                lo, sep, hi = part.strip().partition("..")
                out.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
        except ValueError:
            raise SuiteError(f"suite {self.suite}: bad integer range {raw!r} for {key}") from None
        return out


_GUARDED = (MetwarpError, ValueError, ArithmeticError, np.linalg.LinAlgError)


def guard(ctx: Ctx, name: str, body: Callable[[], list[Record]]) -> list[Record]:
    """Run ``body``; turn failures into a single failed record named ``name``."""
    try:
        return body()
    except PreconditionError as e:
        res = e.residual if isinstance(e.residual, float) else math.nan
        return [failed(ctx.cid(name), ctx.suite, f"precondition: {e}", res)]
    except _GUARDED as e:
        return [failed(ctx.cid(name), ctx.suite, f"{type(e).__name__}: {e}")]


def _need_warp(ctx: Ctx) -> warped.WarpedProduct:
    if ctx.spec.warp is None:
        raise PreconditionError("spec has no [warp] section")
    return ctx.spec.warp


def _rec(ctx: Ctx, name: str, samples: int, residual: float, tol_key: str, note: str = "") -> Record:
    return measured(ctx.cid(name), ctx.suite, samples, residual, ctx.tol[tol_key], note)


# -- structure resolution ------------------------------------------------------------

@dataclass(frozen=True)
class Resolved:
    name: str
    chart: Chart
    field: OperatorField
    params: MetallicParams
    product: structures.ProductMetallicStructure | None = None


def resolve_structure(spec, name: str) -> Resolved:
    if name not in spec.structures:
        raise SuiteError(f"unknown structure {name!r}")
    s = spec.structures[name]
    if s.kind == "matrix":
        return Resolved(name, s.field.chart, s.field, s.params)
    warp = spec.warp
    if s.kind in ("J+", "J-"):
        prod = structures.J_pm_product(warp, 1 if s.kind == "J+" else -1, s.params)
    else:
        b, f = spec.structures[s.base], spec.structures[s.fiber]
        prod = structures.J_pair(warp, b.field, f.field, s.params)
    return Resolved(name, prod.field.chart, prod.field, s.params, prod)


def _pairs(ctx: Ctx) -> list[tuple[str, str]]:
    names = ctx.get_list("pairs")
    if names is None:
        raise SuiteError(f"suite {ctx.suite} needs a 'pairs = J1:J2, ...' parameter")
    out = []
    for item in names:
        a, sep, b = item.partition(":")
        if not sep:
            raise SuiteError(f"pair {item!r} must be written J1:J2")
        out.append((a.strip(), b.strip()))
    return out


def _factor_pair(ctx: Ctx, a: str, b: str) -> tuple[OperatorField, OperatorField, MetallicParams]:
    spec = ctx.spec
    warp = _need_warp(ctx)
    r1, r2 = resolve_structure(spec, a), resolve_structure(spec, b)
    if r1.chart != warp.base or r2.chart != warp.fiber:
        raise SuiteError(f"pair {a}:{b} must be a base structure and a fiber structure")
    if r1.params != r2.params:
        raise MismatchedParamsError(f"{a} and {b} use different (p,q)")
    return r1.field, r2.field, r1.params


# -- metallic-algebra ------------------------------------------------------------------

def _random_almost_product(rng: np.random.Generator, dim: int) -> np.ndarray:
    """``S diag(+-1) S^-1`` with both signs present and ``S`` moderately conditioned."""
    plus = int(rng.integers(1, dim))
    signs = np.array([1.0] * plus + [-1.0] * (dim - plus))
    q1, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    q2, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    S = q1 @ np.diag(np.exp(rng.uniform(-0.5, 0.5, dim))) @ q2
    return S @ np.diag(signs) @ np.linalg.inv(S)


def _battery_one(p: int, q: int, rng: np.random.Generator, dims: Sequence[int], n_pow: int) -> np.ndarray:
    params = MetallicParams(p, q)
    F = _random_almost_product(rng, int(rng.choice(dims)))
    eye = np.eye(F.shape[0])
    Jp = metallic.induced_metallic(F, 1, params)
    Jm = metallic.induced_metallic(F, -1, params)
    induced = max(metallic.metallic_residual(Jp, params), metallic.metallic_residual(Jm, params))
    total = float(np.max(np.abs(Jp + Jm - p * eye)))
    trip = max(float(np.max(np.abs(metallic.induced_product(Jp, 1, params) - F))),
               float(np.max(np.abs(metallic.induced_product(Jm, -1, params) - F))),
               float(np.max(np.abs(metallic.induced_metallic(metallic.induced_product(Jp, 1, params), 1, params)
                                   - Jp))))
    pr = metallic.projectors(Jp, params)
    proj = metallic.projector_residual(pr)
    eig = max(float(np.max(np.abs(Jp @ pr.l - params.sigbar * pr.l))),
              float(np.max(np.abs(Jp @ pr.m - params.sigma * pr.m))))
    power = max(metallic.power_identity_residual(J, params, n) for J in (Jp, Jm) for n in range(1, n_pow + 1))
    literal = max(metallic.power_identity_residual(J, params, n, literal=True)
                  for J in (Jp, Jm) for n in range(1, n_pow + 1))
    scale = max(float(np.max(np.abs(metallic.matrix_power(J, n + 1))))
                for J in (Jp, Jm) for n in range(1, n_pow + 1))
    return np.array([induced, total, trip, proj, eig, power, literal, power / scale])


def _binet_residual(p: int, q: int, n_max: int = 12) -> float:
    params = MetallicParams(p, q)
    s, sb = params.sigma, params.sigbar
    worst = 0.0
    for n in range(1, n_max + 1):
        g = metallic.fibonacci(p, q, n)
        worst = max(worst, abs((s ** n - sb ** n) / (s - sb) - g) / abs(g))
    return worst


def suite_metallic_algebra(ctx: Ctx) -> list[Record]:
    recs: list[Record] = []
    ps = ctx.get_range("p", range(1, 6))
    qs = ctx.get_range("q", range(1, 6))
    count = ctx.get_int("battery", 20)
    dims = ctx.get_range("dims", range(2, 7))
    n_pow = ctx.get_int("powers", 10)

    def battery() -> list[Record]:
        jobs = [(p, q) for p in ps for q in qs for _ in range(count)]
        cid = ctx.cid("battery")

        def one(i):
            p, q = jobs[i]
            return _battery_one(p, q, ctx.sampler.rng(cid, i), dims, n_pow)

        vals = np.array(ctx.map(one, range(len(jobs)))) if jobs else np.zeros((0, 8))
        worst = vals.max(axis=0) if len(vals) else np.zeros(8)
        argw = vals.argmax(axis=0) if len(vals) else np.zeros(8, dtype=int)
        where = lambda i: f"worst at p={jobs[argw[i]][0]}, q={jobs[argw[i]][1]}" if jobs else ""
        n = len(jobs)
        return [
            _rec(ctx, "induced-metallic", n, worst[0], "conjugation"),
            _rec(ctx, "induced-sum", n, worst[1], "conjugation", "J+ + J- = pI"),
            _rec(ctx, "round-trip", n, worst[2], "conjugation"),
            _rec(ctx, "projectors", n, worst[3], "algebraic"),
            _rec(ctx, "projector-eigenspaces", n, worst[4], "conjugation"),
            _rec(ctx, "power-identity", n, worst[5], "power",
                 f"J^(n+1) = g_(n+1) J + q g_n I, n <= {n_pow}; {where(5)}"),
            _rec(ctx, "power-identity-literal", n, worst[6], "power",
                 f"constant term g_n without q; {where(6)}"),
            _rec(ctx, "power-identity-relative", n, worst[7], "conjugation",
                 f"corrected form divided by max |J^(n+1)|; {where(7)}"),
        ]

    recs += guard(ctx, "battery", battery)
    recs += guard(ctx, "binet", lambda: [
        _rec(ctx, "binet", len(ps) * len(qs), max(_binet_residual(p, q) for p in ps for q in qs),
             "value", "relative, n <= 12")])

    spec = ctx.spec
    for name in sorted(spec.structures):
        recs += guard(ctx, f"structure.{name}", lambda name=name: _structure_records(ctx, name))
    for name in sorted(spec.maps):
        recs += guard(ctx, f"map.{name}", lambda name=name: _map_records(ctx, name))
    if spec.warp is not None:
        recs += guard(ctx, "product-F", lambda: _product_F_records(ctx))
    return recs


def _structure_records(ctx: Ctx, name: str) -> list[Record]:
    r = resolve_structure(ctx.spec, name)
    cid = ctx.cid(f"structure.{name}")

    def one(x):
        M = r.field.matrix_at(x, r.params)
        G = geometry.metric_at(r.chart, x, r.params)
        sym, quad = metallic.compatibility_residuals(M, G, r.params)
        return metallic.metallic_residual(M, r.params), sym, quad

    w = ctx.over_samples(cid, r.chart, one)
    n = ctx.samples
    return [
        _rec(ctx, f"structure.{name}.metallic", n, w[0], "conjugation"),
        _rec(ctx, f"structure.{name}.compatible-symmetric", n, w[1], "conjugation"),
        _rec(ctx, f"structure.{name}.compatible-quadratic", n, w[2], "conjugation"),
    ]


def _map_records(ctx: Ctx, name: str) -> list[Record]:
    m = ctx.spec.maps[name]
    if m.source_structure is None or m.target_structure is None:
        return [skipped(ctx.cid(f"map.{name}"), ctx.suite, "map declares no J1/J2 structures")]
    r1 = resolve_structure(ctx.spec, m.source_structure)
    r2 = resolve_structure(ctx.spec, m.target_structure)
    cid = ctx.cid(f"map.{name}")
    w = ctx.over_samples(cid, m.map.source,
                         lambda x: structures.metallic_map_residual(m.map, r1.field, r2.field, r1.params, [x]))
    return [_rec(ctx, f"map.{name}", ctx.samples, w[0], "conjugation",
                 f"{m.source_structure} -> {m.target_structure}")]


def _product_F_records(ctx: Ctx) -> list[Record]:
    warp = ctx.spec.warp
    F = structures.product_structure_F(warp)
    chart = warp.chart
    cid = ctx.cid("product-F")
    n = ctx.samples
    pts = ctx.points(chart, cid)

    def alg(x):
        Fm = F.matrix_at(x)
        G = geometry.metric_at(chart, x)
        return metallic.almost_product_residual(Fm), metallic.compatibility_residuals(Fm, G)[0]

    w = np.max(np.array(ctx.map(alg, pts)), axis=0) if pts else np.zeros(2)
    par = max(ctx.map(lambda x: geometry.nabla_operator_at(chart, F, x), pts), default=0.0)
    note = "warp constant" if warp.is_unwarped() else "warp not constant: F is not parallel"
    recs = [
        _rec(ctx, "product-F.almost-product", n, w[0], "algebraic"),
        _rec(ctx, "product-F.symmetric", n, w[1], "algebraic"),
        _rec(ctx, "product-F.parallel", n, par, "parallel", note),
    ]
    # For J+ the projector onto the sigma-eigenspace is the base projector.
    Jp = structures.J_pm_product(warp, 1, metallic.GOLDEN)
    pr = metallic.projectors(Jp.matrix_at(pts[0] if pts else warp.chart.sample_point(
        ctx.sampler.rng(cid, 0))), metallic.GOLDEN)
    res = max(float(np.max(np.abs(pr.m - structures.base_projector(warp)))),
              float(np.max(np.abs(pr.l - structures.fiber_projector(warp)))))
    recs.append(_rec(ctx, "product-F.projectors", 1, res, "algebraic", "m = base, l = fiber for J+"))
    return recs


# -- oracle-selfcheck ------------------------------------------------------------------------

def _reference_charts() -> dict[str, Chart]:
    return {
        "sphere": geometry.chart_from_text("ref-sphere", ["th", "ph"], [(0.3, 2.8), (0.0, 6.2)],
                                           [["1", "0"], ["0", "sin(th)^2"]]),
        "hyperbolic": geometry.chart_from_text("ref-hyperbolic", ["t", "x"], [(-1, 1), (-1, 1)],
                                               [["1", "0"], ["0", "exp(2*t)"]]),
        "polar": geometry.chart_from_text("ref-polar", ["r", "a"], [(0.5, 3.0), (0.0, 6.2)],
                                          [["1", "0"], ["0", "r^2"]]),
        "cartesian": geometry.euclidean_chart("ref-cartesian", ["x", "y"], [(-2, 2), (-2, 2)]),
    }


def christoffel_fd(chart: Chart, x, params=None, h: float = FD_STEP) -> np.ndarray:
    """Christoffel symbols from central differences of the metric."""
    x = np.asarray(x, dtype=float)
    d = chart.dim
    dg = np.empty((d, d, d))
    for m in range(d):
        e = np.zeros(d)
        e[m] = h
        dg[m] = (geometry.metric_at(chart, x + e, params) - geometry.metric_at(chart, x - e, params)) / (2 * h)
    ginv = np.linalg.inv(geometry.metric_at(chart, x, params))
    first = dg.transpose(2, 0, 1) + dg.transpose(1, 2, 0) - dg
    return 0.5 * np.einsum("kl,lij->kij", ginv, first)


def _chart_selfcheck(x, chart: Chart) -> tuple[float, ...]:
    loc = geometry.local(chart, x)
    R = loc.riemann
    anti = float(np.max(np.abs(R + R.transpose(0, 1, 3, 2))))
    bianchi = R + np.einsum("lijk->lkij", R) + np.einsum("ljki->lkij", R)
    low = np.einsum("wl,lkij->ijkw", loc.g, R)  # low[i,j,k,w] = g(R(e_i,e_j)e_k, e_w)
    pair = low - low.transpose(2, 3, 0, 1)
    S = loc.ricci
    gam = loc.gamma
    fd = christoffel_fd(chart, x)
    rel = float(np.max(np.abs(fd - gam))) / max(1.0, float(np.max(np.abs(gam))))
    return (loc.metric_compatibility(), anti, float(np.max(np.abs(bianchi))),
            float(np.max(np.abs(pair))), float(np.max(np.abs(S - S.T))), rel)


def suite_oracle_selfcheck(ctx: Ctx) -> list[Record]:
    recs: list[Record] = []
    refs = _reference_charts()
    n = ctx.samples

    def sphere():
        ch = refs["sphere"]
        w = ctx.over_samples(ctx.cid("reference.sphere-sectional"), ch,
                             lambda x: abs(geometry.local(ch, x).sectional(np.array([1.0, 0]), np.array([0, 1.0])) - 1))
        return [_rec(ctx, "reference.sphere-sectional", n, w[0], "oracle-exact", "K = 1")]

    def hyperbolic():
        ch = refs["hyperbolic"]

        def one(x):
            loc = geometry.local(ch, x)
            return float(np.max(np.abs(loc.ricci + loc.g)))
        w = ctx.over_samples(ctx.cid("reference.hyperbolic-ricci"), ch, one)
        return [_rec(ctx, "reference.hyperbolic-ricci", n, w[0], "oracle-curvature", "Ric = -g")]

    def flat(key):
        ch = refs[key]
        w = ctx.over_samples(ctx.cid(f"reference.{key}-flat"), ch,
                             lambda x: float(np.max(np.abs(geometry.riemann_at(ch, x)))))
        return [_rec(ctx, f"reference.{key}-flat", n, w[0], "oracle-exact", "R = 0")]

    recs += guard(ctx, "reference.sphere-sectional", sphere)
    recs += guard(ctx, "reference.hyperbolic-ricci", hyperbolic)
    recs += guard(ctx, "reference.polar-flat", lambda: flat("polar"))
    recs += guard(ctx, "reference.cartesian-flat", lambda: flat("cartesian"))

    names = ("nabla-g", "antisymmetry", "bianchi", "pair-symmetry", "ricci-symmetry", "christoffel-fd")
    keys = ("oracle-exact", "algebraic", "oracle-exact", "oracle-exact", "oracle-exact", "finite-difference")

    for cname in sorted(ctx.spec.charts):
        chart = ctx.spec.charts[cname]

        def body(chart=chart, cname=cname):
            w = ctx.over_samples(ctx.cid(f"chart.{cname}"), chart, lambda x: _chart_selfcheck(x, chart))
            return [_rec(ctx, f"chart.{cname}.{nm}", n, w[i], key) for i, (nm, key) in enumerate(zip(names, keys))]

        recs += guard(ctx, f"chart.{cname}", body)
    return recs


# -- warped-connection -------------------------------------------------------------------------

def _test_field(chart: Chart) -> list[exprlang.Expression]:
    """A smooth non-parallel vector field on ``chart`` used to exercise derivative terms."""
    c = chart.coords
    out = []
    for k, name in enumerate(c):
        other = c[(k + 1) % len(c)]
        out.append(exprlang.parse(f"{k + 1} + sin({name})*{other} + cos({other})/{k + 2}"))
    return out


def suite_warped_connection(ctx: Ctx) -> list[Record]:
    recs: list[Record] = []

    def body() -> list[Record]:
        warp = _need_warp(ctx)
        zero_b = [exprlang.Num(0.0)] * warp.n
        zero_f = [exprlang.Num(0.0)] * warp.m
        yb, yf = _test_field(warp.base), _test_field(warp.fiber)
        out = []
        combos = {"H": (np.eye(warp.n + warp.m)[:warp.n]), "V": np.eye(warp.n + warp.m)[warp.n:]}
        for xk, Xs in combos.items():
            for yk, (Y1, Y2) in (("H", (yb, zero_f)), ("V", (zero_b, yf))):
                name = f"X{xk}-Y{yk}"

                def one(x, Xs=Xs, Y1=Y1, Y2=Y2):
                    return max(float(np.max(np.abs(warped.connection_closed_form(warp, x, X, Y1, Y2)
                                                   - warped.connection_oracle(warp, x, X, Y1, Y2))))
                               for X in Xs)

                w = ctx.over_samples(ctx.cid(name), warp.chart, one)
                out.append(_rec(ctx, name, ctx.samples, w[0], "oracle-curvature"))
        w = ctx.over_samples(ctx.cid("leaves-mixed-christoffel"), warp.chart,
                             lambda x: warped.mixed_christoffel_residual(warp, [x]))
        out.append(_rec(ctx, "leaves-mixed-christoffel", ctx.samples, w[0], "leaves"))
        return out

    recs += guard(ctx, "connection", body)
    return recs


# -- lemma suites -------------------------------------------------------------------------------

def suite_lemma_curvature(ctx: Ctx) -> list[Record]:
    recs: list[Record] = []
    try:
        warp = _need_warp(ctx)
    except PreconditionError as e:
        return [failed(ctx.cid("precondition"), ctx.suite, f"precondition: {e}")]
    for case in range(1, 6):
        name = f"case{case}"
        if warp.m < 2 and case in warped.RIEMANN_CASES_NEEDING_M2:
            recs.append(skipped(ctx.cid(name), ctx.suite, "m>1 required", ctx.tol["oracle-curvature"]))
            continue

        def body(case=case, name=name):
            w = ctx.over_samples(ctx.cid(name), warp.chart,
                                 lambda x: warped.riemann_case_residual(warp, case, [x], require_m_gt_1=False))
            note = "m=1, reported separately" if warp.m < 2 else ""
            return [_rec(ctx, name, ctx.samples, w[0], "oracle-curvature", note)]

        recs += guard(ctx, name, body)
    K = ctx.get("constant_curvature")
    if K is not None:
        recs += guard(ctx, "constant-curvature", lambda: _constant_curvature(ctx, warp, float(K)))
    return recs


def _constant_curvature(ctx: Ctx, warp: warped.WarpedProduct, K: float) -> list[Record]:
    def one(x):
        loc = geometry.local(warp.chart, x)
        g = loc.g
        low = np.einsum("wl,lkij->ijkw", g, loc.riemann)
        model = K * (np.einsum("jk,iw->ijkw", g, g) - np.einsum("ik,jw->ijkw", g, g))
        return float(np.max(np.abs(low - model)))

    w = ctx.over_samples(ctx.cid("constant-curvature"), warp.chart, one)
    return [_rec(ctx, "constant-curvature", ctx.samples, w[0], "oracle-curvature", f"K = {K:g}")]


def suite_lemma_ricci(ctx: Ctx) -> list[Record]:
    recs: list[Record] = []
    try:
        warp = _need_warp(ctx)
    except PreconditionError as e:
        return [failed(ctx.cid("precondition"), ctx.suite, f"precondition: {e}")]
    for case in range(1, 4):
        name = f"case{case}"
        if warp.m < 2 and case in warped.RICCI_CASES_NEEDING_M2:
            recs.append(skipped(ctx.cid(name), ctx.suite, "m>1 required", ctx.tol["oracle-curvature"]))
            continue

        def body(case=case, name=name):
            w = ctx.over_samples(ctx.cid(name), warp.chart,
                                 lambda x: warped.ricci_case_residual(warp, case, [x], require_m_gt_1=False))
            return [_rec(ctx, name, ctx.samples, w[0], "oracle-curvature")]

        recs += guard(ctx, name, body)
    return recs


def suite_product_case(ctx: Ctx) -> list[Record]:
    def body():
        warp = _need_warp(ctx)
        w = ctx.over_samples(ctx.cid("blocks"), warp.chart,
                             lambda x: warped.product_case_residuals(warp, [x]))
        return [_rec(ctx, "curvature-blocks", ctx.samples, w[0], "product"),
                _rec(ctx, "ricci-blocks", ctx.samples, w[1], "product")]

    return guard(ctx, "precondition", body)


# -- structure suites ---------------------------------------------------------------------------

def _structure_names(ctx: Ctx, product_only: bool = False) -> list[str]:
    names = ctx.get_list("structures")
    if names is None:
        names = sorted(ctx.spec.structures)
        if product_only:
            names = [s for s in names if ctx.spec.structures[s].kind != "matrix"]
    return names


def suite_proposition_identities(ctx: Ctx) -> list[Record]:
    recs: list[Record] = []
    n_max = ctx.get_int("n_max", 8)
    labels = ("commutes", "symmetric-slots", "square-slots", "power-slots",
              "square-slots-literal", "power-slots-literal")
    names = _structure_names(ctx)
    if not names:
        return [skipped(ctx.cid("structures"), ctx.suite, "spec declares no structures")]
    for name in names:

        def body(name=name):
            r = resolve_structure(ctx.spec, name)
            w = ctx.over_samples(ctx.cid(name), r.chart,
                                 lambda x: tuple(structures.curvature_identity_residuals(
                                     r.chart, r.field, r.params, [x], n_max)))
            notes = {"power-slots": f"n <= {n_max}", "power-slots-literal": f"n <= {n_max}",
                     "square-slots-literal": "coefficients q, p as printed"}
            pq = f"p={r.params.p}, q={r.params.q}"
            return [_rec(ctx, f"{name}.{lab}", ctx.samples, w[i], "oracle-curvature",
                         "; ".join(filter(None, [pq, notes.get(lab, "")])))
                    for i, lab in enumerate(labels)]

        recs += guard(ctx, f"{name}.precondition", body)
    return recs


def suite_locally_metallic(ctx: Ctx) -> list[Record]:
    recs: list[Record] = []
    tol = ctx.tol["parallel"]
    for a, b in _pairs(ctx):
        tag = f"{a}:{b}"

        def body(a=a, b=b, tag=tag):
            J1, J2, params = _factor_pair(ctx, a, b)
            warp = ctx.spec.warp
            w = ctx.over_samples(ctx.cid(tag), warp.chart,
                                 lambda x: structures.locally_metallic_conditions(warp, J1, J2, params, [x]))
            cond, direct = max(w[0], w[1]), w[2]
            agree = (cond <= tol and direct <= tol) or (cond > 10 * tol and direct > 10 * tol)
            n = ctx.samples
            return [
                _rec(ctx, f"{tag}.a", n, w[0], "parallel", "df2(J1 X) V = df2(X) J2 V"),
                _rec(ctx, f"{tag}.b", n, w[1], "parallel", "g2(V, J2 W) grad f2 = g2(V, W) J1 grad f2"),
                _rec(ctx, f"{tag}.c", n, w[2], "parallel", "nabla J~ on the warped chart"),
                measured(ctx.cid(f"{tag}.equivalence"), ctx.suite, n, 0.0 if agree else 1.0, 0.0,
                         f"conditions {'hold' if cond <= tol else 'fail'}, "
                         f"direct {'holds' if direct <= tol else 'fails'}"),
            ]

        recs += guard(ctx, f"{tag}.precondition", body)
    return recs


def suite_fiber_invariance(ctx: Ctx) -> list[Record]:
    recs: list[Record] = []
    try:
        warp = _need_warp(ctx)
    except PreconditionError as e:
        return [failed(ctx.cid("precondition"), ctx.suite, f"precondition: {e}")]
    names = _structure_names(ctx, product_only=True)
    if not names:
        return [skipped(ctx.cid("structures"), ctx.suite, "spec declares no product structures")]
    for name in names:

        def body(name=name):
            r = resolve_structure(ctx.spec, name)
            if r.product is None:
                raise SuiteError(f"{name} is not a structure on the product")
            w = ctx.over_samples(ctx.cid(name), warp.chart,
                                 lambda x: structures.fiber_invariance_residual(warp, r.product, [x]))
            note = "vacuous: warp constant" if warp.is_unwarped() else ""
            par = max(ctx.map(lambda x: geometry.nabla_operator_at(warp.chart, r.field, x, r.params),
                              ctx.points(warp.chart, ctx.cid(name))))
            if par > ctx.tol["parallel"]:
                note = f"J~ not parallel (|nabla J~| = {par:.3g}), hypothesis unmet"
            return [_rec(ctx, name, ctx.samples, w[0], "oracle-curvature", note)]

        recs += guard(ctx, name, body)
    return recs


def suite_ricci_invariance(ctx: Ctx) -> list[Record]:
    recs: list[Record] = []
    tol = ctx.tol["oracle-curvature"]
    for a, b in _pairs(ctx):
        tag = f"{a}:{b}"

        def body(a=a, b=b, tag=tag):
            J1, J2, params = _factor_pair(ctx, a, b)
            warp = ctx.spec.warp

            def one(x):
                h, r = structures.ricci_invariance_residuals(warp, J1, J2, params, [x])
                return h, r, structures.vertical_ricci_defect(warp, J1, J2, params, [x])

            w = ctx.over_samples(ctx.cid(tag), warp.chart, one)
            violated = w[0] <= tol and w[1] > tol
            n = ctx.samples
            return [
                _rec(ctx, f"{tag}.hessian-defect", n, w[0], "oracle-curvature"),
                _rec(ctx, f"{tag}.ricci-defect", n, w[1], "oracle-curvature"),
                _rec(ctx, f"{tag}.vertical-defect", n, w[2], "oracle-curvature"),
                measured(ctx.cid(f"{tag}.implication"), ctx.suite, n, 1.0 if violated else 0.0, 0.0,
                         "hessian defect 0 implies ricci defect 0"),
            ]

        recs += guard(ctx, f"{tag}.precondition", body)
    return recs


# -- example3 -------------------------------------------------------------------------------------

def suite_example3(ctx: Ctx) -> list[Record]:
    def body() -> list[Record]:
        n = ctx.get_int("n", 2)
        k = ctx.get_int("k", 1)
        params = MetallicParams(ctx.get_int("p", 1), ctx.get_int("q", 1))
        base_cfg = ex3.ExampleConfig(n, k, params)
        spec_n = ex3.example_warped_spec(n)
        cid = ctx.cid("configs")

        def one(i):
            rng = ctx.sampler.rng(cid, i)
            u = rng.uniform(0.5, 3.0)
            a = rng.uniform(ex3.ANGLE_MARGIN, math.pi / 2 - ex3.ANGLE_MARGIN, n)
            cfg = ex3.ExampleConfig(n, k, params, (u, *a))
            target = np.diag([float(n)] + [u * u] * n)
            warped_metric = geometry.metric_at(spec_n.chart, np.array(cfg.point))
            return (ex3.gram_structure_residual(cfg),
                    ex3.jz0_orthogonality(cfg),
                    ex3.eigen_frame_residual(cfg),
                    abs(ex3.slant_cosine_direct(cfg) - ex3.slant_cosine(n, k, params)),
                    float(np.max(np.abs(ex3.induced_metric(cfg) - target))),
                    float(np.max(np.abs(warped_metric - ex3.gram(ex3.frame_at(cfg))))))

        rows = np.array(ctx.map(one, range(ctx.samples))) if ctx.samples else np.zeros((0, 6))
        w = rows.max(axis=0) if len(rows) else np.zeros(6)
        s = ctx.samples
        value = ex3.slant_cosine(n, k, params)
        degenerate = not base_cfg.split_valid
        out = [
            _rec(ctx, "gram", s, w[0], "algebraic", "diag(n, u^2, ..., u^2)"),
            _rec(ctx, "jz0-orthogonal", s, w[1], "algebraic"),
            _rec(ctx, "eigen-frame", s, w[2], "algebraic"),
            _rec(ctx, "slant-cosine", s, w[3], "algebraic", f"value={value:.17g}"),
            _rec(ctx, "induced-metric", s, w[4], "conjugation"),
            _rec(ctx, "warped-metric", s, w[5], "algebraic"),
            _rec(ctx, "ambient-metallic", 1,
                 ex3.ambient_metallic_residual(n, k, params, allow_degenerate=degenerate), "algebraic",
                 f"k={k} outside 2..n-1, degenerate path" if degenerate else ""),
        ]
        expect = ctx.get("expect")
        if expect is not None:
            out.append(_rec(ctx, "slant-cosine-expected", 1, abs(value - float(expect)), "value",
                            f"value={value:.17g}, expected {expect}"))
        return out

    return guard(ctx, "precondition", body)


SUITES: dict[str, Callable[[Ctx], list[Record]]] = {
    "metallic-algebra": suite_metallic_algebra,
    "oracle-selfcheck": suite_oracle_selfcheck,
    "warped-connection": suite_warped_connection,
    "lemma-curvature": suite_lemma_curvature,
    "lemma-ricci": suite_lemma_ricci,
    "product-case": suite_product_case,
    "proposition-identities": suite_proposition_identities,
    "locally-metallic": suite_locally_metallic,
    "fiber-invariance": suite_fiber_invariance,
    "ricci-invariance": suite_ricci_invariance,
    "example3": suite_example3,
}


def run_suite(spec, suite: str, seed: int = 0, samples: int = 30,
              tol_overrides: Mapping[str, float] | None = None, workers: int = 1,
              params: Mapping[str, str] | None = None) -> Report:
    """Run one named suite. Identical inputs give identical reports for any ``workers``."""
    if suite not in SUITES:
        raise SuiteError(f"unknown suite {suite!r}; known: {', '.join(SUITES)}")
    if samples < 1:
        raise SuiteError("samples must be >= 1")
    tol = merge_tolerances(tol_overrides)
    p = dict(spec.suite_params(suite) if params is None else params)
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        ctx = Ctx(spec, suite, int(seed), int(samples), tol, p, pool)
        try:
            records = SUITES[suite](ctx)
        except SuiteError as e:
            records = [failed(ctx.cid("parameters"), suite, str(e))]
    finally:
        if pool is not None:
            pool.shutdown()
    return Report(records)


def run_suites(spec, suites: Sequence[str] | None = None, **kwargs) -> Report:
    """Run the given suites, or every suite the spec requests."""
    names = list(suites) if suites else [s.name for s in spec.suites]
    report = Report()
    for name in names:
        report.extend(run_suite(spec, name, **kwargs).records)
    return report
