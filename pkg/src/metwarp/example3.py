"""Cone-type submanifold of R^{2n} with a split metallic structure.

The immersion is ``(u, a_1..a_n) -> (u cos a_1, u sin a_1, ..., u cos a_n, u sin a_n)``.
Its coordinate frame ``Z_0 = d/du``, ``Z_i = d/da_i`` is orthogonal with
``|Z_0|^2 = n`` and ``|Z_i|^2 = u^2``. The ambient structure scales the first
``k`` coordinate pairs by ``sigma`` and the rest by ``sigbar``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import exprlang, metallic
from .errors import MetwarpError
from .geometry import Chart, euclidean_chart
from .metallic import MetallicParams
from .warped import WarpedProduct

ANGLE_MARGIN = 0.1


@dataclass(frozen=True)
class ExampleConfig:
    n: int
    k: int
    params: MetallicParams
    point: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.n < 2:
            raise MetwarpError(f"n must be >= 2, got {self.n}")
        if not 0 <= self.k <= self.n:
            raise MetwarpError(f"k must lie in 0..n, got k={self.k} for n={self.n}")
        if not self.point:
            object.__setattr__(self, "point", (1.0,) + (math.pi / 4,) * self.n)
        point = tuple(float(v) for v in self.point)
        object.__setattr__(self, "point", point)
        if len(point) != self.n + 1:
            raise MetwarpError(f"point needs {self.n + 1} coordinates (u, a_1..a_n)")
        if not point[0] > 0:
            raise MetwarpError("u must be positive")

    @property
    def split_valid(self) -> bool:
        """Whether ``k`` lies in the split range ``2..n-1``."""
        return 2 <= self.k <= self.n - 1

    @property
    def u(self) -> float:
        return self.point[0]

    @property
    def angles(self) -> np.ndarray:
        return np.array(self.point[1:])


def immersion_exprs(n: int) -> list[exprlang.Expression]:
    out = []
    for i in range(1, n + 1):
        out.append(exprlang.parse(f"u*cos(a{i})"))
        out.append(exprlang.parse(f"u*sin(a{i})"))
    return out


def coords(n: int) -> list[str]:
    return ["u"] + [f"a{i}" for i in range(1, n + 1)]


def frame_at(cfg: ExampleConfig) -> np.ndarray:
    """Rows ``Z_0, Z_1, ..., Z_n`` as vectors of R^{2n}."""
    n, u, a = cfg.n, cfg.u, cfg.angles
    Z = np.zeros((n + 1, 2 * n))
    Z[0, 0::2] = np.cos(a)
    Z[0, 1::2] = np.sin(a)
    for i in range(n):
        Z[i + 1, 2 * i] = -u * np.sin(a[i])
        Z[i + 1, 2 * i + 1] = u * np.cos(a[i])
    return Z


def gram(frame: np.ndarray) -> np.ndarray:
    return frame @ frame.T


def ambient_J_diagonal(n: int, k: int, params: MetallicParams, sigbar: float | None = None,
                       allow_degenerate: bool = False) -> np.ndarray:
    """Diagonal of the ambient structure on R^{2n}.

    ``sigbar`` defaults to ``p - sigma``; pass another value to test
    alternatives. ``k`` must be in ``2..n-1`` unless ``allow_degenerate``,
    which admits ``0..n``.
    """
    lo = 0 if allow_degenerate else 2
    hi = n if allow_degenerate else n - 1
    if not lo <= k <= hi:
        raise MetwarpError(f"split index k={k} outside {lo}..{hi} for n={n}")
    sb = params.sigbar if sigbar is None else sigbar
    return np.array([params.sigma] * (2 * k) + [sb] * (2 * (n - k)))


def ambient_J_matrix(n: int, k: int, params: MetallicParams, sigbar: float | None = None,
                     allow_degenerate: bool = False) -> np.ndarray:
    return np.diag(ambient_J_diagonal(n, k, params, sigbar, allow_degenerate))


def ambient_J_apply(v, k: int, params: MetallicParams, sigbar: float | None = None,
                    allow_degenerate: bool = False) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size % 2:
        raise MetwarpError("ambient vectors have an even number of components")
    return ambient_J_diagonal(v.size // 2, k, params, sigbar, allow_degenerate) * v


def slant_cosine(n: int, k: int, params: MetallicParams) -> float:
    """Cosine of the angle between ``J Z_0`` and ``Z_0``; depends on ``n, k, p, q`` only."""
    if not 0 <= k <= n:
        raise MetwarpError(f"k must lie in 0..n, got k={k} for n={n}")
    s, sb = params.sigma, params.sigbar
    return (k * s + (n - k) * sb) / math.sqrt(n * (k * s * s + (n - k) * sb * sb))


def slant_cosine_direct(cfg: ExampleConfig) -> float:
    """Same cosine from the frame and the ambient structure."""
    Z0 = frame_at(cfg)[0]
    JZ0 = ambient_J_apply(Z0, cfg.k, cfg.params, allow_degenerate=True)
    return float(JZ0 @ Z0 / (np.linalg.norm(JZ0) * np.linalg.norm(Z0)))


def jz0_orthogonality(cfg: ExampleConfig) -> float:
    """``max_i |<J Z_0, Z_i>|`` for ``i = 1..n``."""
    Z = frame_at(cfg)
    JZ0 = ambient_J_apply(Z[0], cfg.k, cfg.params, allow_degenerate=True)
    return float(np.max(np.abs(Z[1:] @ JZ0)))


def eigen_frame_residual(cfg: ExampleConfig) -> float:
    """``max |J Z_i - lambda_i Z_i|`` with ``lambda_i = sigma`` for ``i <= k`` and ``sigbar`` after."""
    Z = frame_at(cfg)
    s, sb = cfg.params.sigma, cfg.params.sigbar
    worst = 0.0
    for i in range(1, cfg.n + 1):
        lam = s if i <= cfg.k else sb
        JZ = ambient_J_apply(Z[i], cfg.k, cfg.params, allow_degenerate=True)
        worst = max(worst, float(np.max(np.abs(JZ - lam * Z[i]))))
    return worst


def induced_metric(cfg: ExampleConfig) -> np.ndarray:
    """Pullback of the Euclidean metric through the immersion, via jets."""
    names = coords(cfg.n)
    env = dict(zip(names, cfg.point))
    jac = np.array([exprlang.eval_jet2(e, env, None, names).gradient for e in immersion_exprs(cfg.n)])
    return jac.T @ jac


def example_warped_spec(n: int) -> WarpedProduct:
    """``n du^2 + u^2 sum da_i^2`` as ``(u > 0, n du^2) x_u (flat angle box)``."""
    if n < 1:
        raise MetwarpError("n must be >= 1")
    base = Chart("base", ("u",), ((0.5, 3.0),), ((exprlang.Num(float(n)),),))
    angles = [f"a{i}" for i in range(1, n + 1)]
    fiber = euclidean_chart("fiber", angles, [(ANGLE_MARGIN, math.pi / 2 - ANGLE_MARGIN)] * n)
    return WarpedProduct(base, fiber, exprlang.Var("u"), name="example3")


def gram_structure_residual(cfg: ExampleConfig) -> float:
    """Distance of the frame Gram matrix from ``diag(n, u^2, ..., u^2)``."""
    target = np.diag([float(cfg.n)] + [cfg.u ** 2] * cfg.n)
    return float(np.max(np.abs(gram(frame_at(cfg)) - target)))


def ambient_metallic_residual(n: int, k: int, params: MetallicParams, sigbar: float | None = None,
                              allow_degenerate: bool = False) -> float:
    return metallic.metallic_residual(ambient_J_matrix(n, k, params, sigbar, allow_degenerate), params)


def random_config(rng: np.random.Generator, n: int, k: int, params: MetallicParams,
                  u_range: Sequence[float] = (0.2, 5.0)) -> ExampleConfig:
    u = rng.uniform(*u_range)
    a = rng.uniform(ANGLE_MARGIN, math.pi / 2 - ANGLE_MARGIN, n)
    return ExampleConfig(n, k, params, (u, *a))
