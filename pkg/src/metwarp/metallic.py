"""Pointwise linear algebra of metallic structures.

A metallic structure is an operator ``J`` with ``J^2 = p J + q I`` for
positive integers ``p, q``. Its eigenvalues are the two roots ``sigma`` and
``sigbar = p - sigma`` of ``x^2 - p x - q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotAlmostProductError, NotMetallicError

# Tolerances used to validate inputs to the conversions below.
STRUCTURE_TOL = 1e-10


def metallic_number(p: int, q: int) -> float:
    """Positive root of ``x^2 - p x - q``."""
    if p < 1 or q < 1:
        raise ValueError(f"p and q must be positive integers, got p={p}, q={q}")
    return (p + math.sqrt(p * p + 4 * q)) / 2


@dataclass(frozen=True)
class MetallicParams:
    p: int
    q: int
    sigma: float = field(init=False)
    sigbar: float = field(init=False)

    def __post_init__(self):
        if int(self.p) != self.p or int(self.q) != self.q:
            raise ValueError("p and q must be integers")
        sigma = metallic_number(int(self.p), int(self.q))
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "sigbar", self.p - sigma)

    @property
    def gap(self) -> float:
        """``2 sigma - p``, the spread between the two eigenvalues."""
        return 2 * self.sigma - self.p


GOLDEN = MetallicParams(1, 1)
SILVER = MetallicParams(2, 1)


@dataclass(frozen=True)
class ProjectorPair:
    l: np.ndarray  # onto the sigbar-eigenspace
    m: np.ndarray  # onto the sigma-eigenspace


def fibonacci(p: int, q: int, n: int) -> int:
    """n-th term of ``g_{k+1} = p g_k + q g_{k-1}`` with ``g_0 = 0, g_1 = 1``.

    Python integers are unbounded, so the sequence is exact for every ``n``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    a, b = 0, 1
    for _ in range(n):
        a, b = b, p * b + q * a
    return a


def _max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def _square(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def metallic_residual(J, params: MetallicParams) -> float:
    J = _square(J)
    eye = np.eye(J.shape[0])
    return _max_abs(J @ J - params.p * J - params.q * eye)


def almost_product_residual(F) -> float:
    F = _square(F)
    return _max_abs(F @ F - np.eye(F.shape[0]))


def compatibility_residuals(J, G, params: MetallicParams | None = None) -> tuple[float, float]:
    """Return ``(symmetry, quadratic)`` residuals of ``g(J., .) = g(., J.)``.

    ``symmetry`` is ``|G J - J^T G|``. ``quadratic`` checks
    ``g(JX, JY) = p g(X, JY) + q g(X, Y)``; it is 0.0 when params are omitted.
    """
    J = _square(J)
    G = _square(G)
    if J.shape != G.shape:
        raise ValueError(f"dimension mismatch: J {J.shape} vs G {G.shape}")
    sym = _max_abs(G @ J - J.T @ G)
    if params is None:
        return sym, 0.0
    quad = _max_abs(J.T @ G @ J - params.p * G @ J - params.q * G)
    return sym, quad


def compatibility_residual(J, G, params: MetallicParams | None = None) -> float:
    return max(compatibility_residuals(J, G, params))


def induced_metallic(F, sign: int, params: MetallicParams) -> np.ndarray:
    """Metallic structure ``±(2σ-p)/2 F + p/2 I`` built from an almost product ``F``."""
    F = _square(F)
    res = almost_product_residual(F)
    if res > STRUCTURE_TOL:
        raise NotAlmostProductError(f"F^2 != I (residual {res:.3g})")
    s = _sign(sign)
    return s * params.gap / 2 * F + params.p / 2 * np.eye(F.shape[0])


def induced_product(J, sign: int, params: MetallicParams, literal: bool = False) -> np.ndarray:
    """Almost product structure ``±(2 J - p I)/(2σ-p)`` built from metallic ``J``.

    The sign multiplies the constant term as well; with ``literal=True`` it does
    not (``±2/(2σ-p) J - p/(2σ-p) I``), and the minus variant then fails to
    square to ``I``.
    """
    J = _square(J)
    _require_metallic(J, params)
    s = _sign(sign)
    c = 1 if literal else s
    return s * (2 / params.gap) * J - c * (params.p / params.gap) * np.eye(J.shape[0])


def projectors(J, params: MetallicParams) -> ProjectorPair:
    J = _square(J)
    _require_metallic(J, params)
    eye = np.eye(J.shape[0])
    l = (-J + params.sigma * eye) / params.gap
    m = (J + (params.sigma - params.p) * eye) / params.gap
    return ProjectorPair(l, m)


def projector_residual(pair: ProjectorPair) -> float:
    """Worst violation of ``l+m=I, l^2=l, m^2=m, lm=ml=0``."""
    l, m = pair.l, pair.m
    eye = np.eye(l.shape[0])
    return max(
        _max_abs(l + m - eye),
        _max_abs(l @ l - l),
        _max_abs(m @ m - m),
        _max_abs(l @ m),
        _max_abs(m @ l),
    )


def matrix_power(J, k: int) -> np.ndarray:
    """``J^k`` by repeated multiplication."""
    J = _square(J)
    out = np.eye(J.shape[0])
    for _ in range(k):
        out = out @ J
    return out


def power_identity_residual(J, params: MetallicParams, n: int, literal: bool = False) -> float:
    """``|J^{n+1} - g_{n+1} J - q g_n I|`` with ``g`` the recurrence above.

    The constant term carries a factor ``q``; without it the identity already
    fails at ``n = 1`` whenever ``q != 1``. ``literal=True`` drops the factor so
    the two forms can be compared.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > 12:
        raise ValueError("n > 12 is outside the supported range")
    J = _square(J)
    g_next, g_n = power_coefficients(params, n, literal)
    return _max_abs(matrix_power(J, n + 1) - g_next * J - g_n * np.eye(J.shape[0]))


def power_coefficients(params: MetallicParams, n: int, literal: bool = False) -> tuple[int, int]:
    """Coefficients ``(a, b)`` with ``J^{n+1} = a J + b I`` for metallic ``J``."""
    g_next = fibonacci(params.p, params.q, n + 1)
    g_n = fibonacci(params.p, params.q, n)
    return g_next, (g_n if literal else params.q * g_n)


def _require_metallic(J: np.ndarray, params: MetallicParams) -> None:
    res = metallic_residual(J, params)
    if res > STRUCTURE_TOL:
        raise NotMetallicError(
            f"J^2 != {params.p} J + {params.q} I (residual {res:.3g})"
        )


def _sign(sign: int) -> int:
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    return sign
