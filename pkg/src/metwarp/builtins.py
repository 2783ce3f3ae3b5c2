"""Built-in spec files, addressable as ``builtin:<name>?key=value&...``."""

from __future__ import annotations

from typing import Callable
from urllib.parse import parse_qsl

from .errors import SpecError


def _pq(opts: dict[str, str]) -> str:
    return f"p = {int(opts.get('p', 1))}\nq = {int(opts.get('q', 1))}\n"


def _polar(opts):
    pq = _pq(opts)
    return f"""
[manifold B]
coords = u
domain = [[0.5, 3]]
metric = [[1]]

[manifold F]
coords = a
domain = [[0.1, 6.2]]
metric = [[1]]

[warp]
name = P
base = B
fiber = F
f = u

[structure J1]
chart = B
matrix = [[sigma]]
{pq}
[structure J2]
chart = F
matrix = [[sigma]]
{pq}
[structure J2bar]
chart = F
matrix = [[sigbar]]
{pq}
[structure Jp]
kind = J+
{pq}
[structure Jm]
kind = J-
{pq}
[structure Jpair]
kind = pair
base = J1
fiber = J2
{pq}
[map p1]
source = P
target = B
components = [u]
J1 = Jpair
J2 = J1

[map p2]
source = P
target = F
components = [a]
J1 = Jpair
J2 = J2

[suite metallic-algebra]
[suite oracle-selfcheck]
[suite warped-connection]
[suite lemma-curvature]
[suite lemma-ricci]
[suite locally-metallic]
pairs = J1:J2, J1:J2bar

[suite fiber-invariance]
structures = Jp, Jm, Jpair
"""


def _hyperbolic(opts):
    pq = _pq(opts)
    return f"""
[manifold B]
coords = t
domain = [[-1, 1]]
metric = [[1]]

[manifold F]
coords = x, y
domain = [[-1, 1], [-1, 1]]
metric = [[1, 0], [0, 1]]

[warp]
name = H3
base = B
fiber = F
f = exp(t)

[structure J1]
chart = B
matrix = [[sigma]]
{pq}
[structure J2s]
chart = F
matrix = [[sigma, 0], [0, sigma]]
{pq}
[structure J2]
chart = F
matrix = [[sigma, 0], [0, sigbar]]
{pq}
[structure Jp]
kind = J+
{pq}
[suite metallic-algebra]
[suite oracle-selfcheck]
[suite warped-connection]
[suite lemma-curvature]
constant_curvature = -1

[suite lemma-ricci]
[suite locally-metallic]
pairs = J1:J2s, J1:J2

[suite fiber-invariance]
structures = Jp

[suite ricci-invariance]
pairs = J1:J2s, J1:J2
"""


_SPHERE = """
[manifold S2]
coords = th, ph
domain = [[0.3, 2.8], [0.1, 6.2]]
metric = [[1, 0], [0, sin(th)^2]]
"""


def _sphere_line(opts):
    pq = _pq(opts)
    return _SPHERE + f"""
[manifold L]
coords = s
domain = [[-1, 1]]
metric = [[1]]

[warp]
name = SL
base = S2
fiber = L
f = 1

[structure J1]
chart = S2
matrix = [[sigma, 0], [0, sigma]]
{pq}
[structure J2]
chart = L
matrix = [[sigbar]]
{pq}
[structure Jp]
kind = J+
{pq}
[structure Jm]
kind = J-
{pq}
[suite metallic-algebra]
[suite oracle-selfcheck]
[suite product-case]
[suite proposition-identities]
structures = Jp, Jm

[suite locally-metallic]
pairs = J1:J2

[suite fiber-invariance]
structures = Jp

[suite ricci-invariance]
pairs = J1:J2
"""


def _sphere_hyperbolic(opts):
    pq = _pq(opts)
    return _SPHERE + f"""
[manifold H2]
coords = t, x
domain = [[-1, 1], [-1, 1]]
metric = [[1, 0], [0, exp(2*t)]]

[warp]
name = SH
base = S2
fiber = H2
f = 1

[structure J1]
chart = S2
matrix = [[sigma, 0], [0, sigma]]
{pq}
[structure J2]
chart = H2
matrix = [[sigbar, 0], [0, sigbar]]
{pq}
[structure Jp]
kind = J+
{pq}
[suite oracle-selfcheck]
[suite product-case]
[suite proposition-identities]
structures = Jp

[suite ricci-invariance]
pairs = J1:J2
"""


def _example3(opts):
    n = int(opts.get("n", 2))
    k = int(opts.get("k", 1))
    p = int(opts.get("p", 1))
    q = int(opts.get("q", 1))
    if n < 1:
        raise SpecError("example3 needs n >= 1")
    angles = ", ".join(f"a{i}" for i in range(1, n + 1))
    dom = ", ".join("[0.1, pi/2 - 0.1]" for _ in range(n))
    eye = ", ".join("[" + ", ".join("1" if i == j else "0" for j in range(n)) + "]" for i in range(n))
    expect = f"expect = {opts['expect']}\n" if "expect" in opts else ""
    return f"""
[manifold base]
coords = u
domain = [[0.5, 3]]
metric = [[{n}]]

[manifold fiber]
coords = {angles}
domain = [{dom}]
metric = [{eye}]

[warp]
name = example3
base = base
fiber = fiber
f = u

[suite example3]
n = {n}
k = {k}
p = {p}
q = {q}
{expect}
[suite oracle-selfcheck]
[suite warped-connection]
[suite lemma-curvature]
[suite lemma-ricci]
"""


def _hessian_counterexample(opts):
    pq = _pq(opts)
    return f"""
[manifold B]
coords = x, y
domain = [[0.5, 1.5], [0.5, 1.5]]
metric = [[1, 0], [0, 1]]

[manifold F]
coords = v, w
domain = [[-1, 1], [-1, 1]]
metric = [[1, 0], [0, 1]]

[warp]
name = BF
base = B
fiber = F
f = x*y

[structure J1]
chart = B
matrix = [[sigma, 0], [0, sigbar]]
{pq}
[structure J1s]
chart = B
matrix = [[sigma, 0], [0, sigma]]
{pq}
[structure J2]
chart = F
matrix = [[sigma, 0], [0, sigma]]
{pq}
[suite ricci-invariance]
pairs = J1:J2, J1s:J2

[suite locally-metallic]
pairs = J1:J2, J1s:J2
"""


def _plane_exp(opts):
    pq = _pq(opts)
    axis = opts.get("axis", "x")
    if axis not in ("x", "y"):
        raise SpecError("plane-exp axis must be x or y")
    return f"""
[manifold B]
coords = x, y
domain = [[-0.5, 0.5], [-0.5, 0.5]]
metric = [[1, 0], [0, 1]]

[manifold F]
coords = s
domain = [[-1, 1]]
metric = [[1]]

[warp]
name = E
base = B
fiber = F
f = exp({axis})

[structure J1]
chart = B
matrix = [[sigma, 0], [0, sigbar]]
{pq}
[structure J2]
chart = F
matrix = [[sigma]]
{pq}
[suite warped-connection]
[suite lemma-curvature]
[suite lemma-ricci]
[suite locally-metallic]
pairs = J1:J2
"""


BUILTINS: dict[str, Callable[[dict[str, str]], str]] = {
    "polar": _polar,
    "hyperbolic": _hyperbolic,
    "sphere-line": _sphere_line,
    "sphere-hyperbolic": _sphere_hyperbolic,
    "example3": _example3,
    "hessian-counterexample": _hessian_counterexample,
    "plane-exp": _plane_exp,
}


def builtin_spec_text(address: str) -> str:
    """Spec text for ``name?key=value&...``; ``example3:n=2,k=1`` is also accepted."""
    name, sep, query = address.partition("?")
    if not sep and ":" in name:
        name, _, query = name.partition(":")
        query = query.replace(",", "&")
    if name not in BUILTINS:
        raise SpecError(f"unknown built-in spec {name!r}; known: {', '.join(sorted(BUILTINS))}")
    try:
        opts = dict(parse_qsl(query, strict_parsing=bool(query)))
    except ValueError:
        raise SpecError(f"malformed built-in query {query!r}") from None
    try:
        return BUILTINS[name](opts)
    except ValueError as e:
        raise SpecError(f"bad built-in parameter: {e}") from None
