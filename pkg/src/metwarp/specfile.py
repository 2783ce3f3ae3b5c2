"""Sectioned text format describing charts, a warped product, structures and suites.

Example::

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
    p = 1
    q = 1

    [structure Jp]
    kind = J+
    p = 1
    q = 1

    [map p1]
    source = P
    target = B
    components = [u]

    [suite lemma-curvature]

Matrices are bracketed rows of expressions. ``kind`` is ``J+``, ``J-`` or
``pair`` (with ``base`` and ``fiber`` naming factor structures); structures
with an explicit ``matrix`` need a ``chart``. Suite sections carry free-form
parameters.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from . import exprlang
from .errors import ExprSyntaxError, MetwarpError, SpecError
from .exprlang import Expression
from .geometry import Chart, OperatorField
from .metallic import MetallicParams
from .structures import CoordinateMap
from .warped import WarpedProduct

STRUCTURE_KINDS = ("matrix", "J+", "J-", "pair")


@dataclass(frozen=True)
class StructureDef:
    name: str
    kind: str
    params: MetallicParams
    chart: str
    field: OperatorField | None = None
    base: str | None = None
    fiber: str | None = None


@dataclass(frozen=True)
class MapDef:
    name: str
    map: CoordinateMap
    source_structure: str | None = None
    target_structure: str | None = None


@dataclass(frozen=True)
class SuiteRequest:
    name: str
    params: Mapping[str, str] = field(default_factory=dict)


@dataclass
class SpecFile:
    charts: dict[str, Chart]
    warp: WarpedProduct | None
    structures: dict[str, StructureDef]
    maps: dict[str, MapDef]
    suites: list[SuiteRequest]
    origin: str = "<text>"

    @property
    def manifolds(self) -> dict[str, Chart]:
        """Declared manifolds, without the assembled product chart."""
        if self.warp is None:
            return dict(self.charts)
        return {k: v for k, v in self.charts.items() if k != self.warp.name}

    def suite_params(self, name: str) -> dict[str, str]:
        for s in self.suites:
            if s.name == name:
                return dict(s.params)
        return {}


# -- bracketed matrices ----------------------------------------------------------------

def parse_matrix(text: str, section: str, key: str) -> list[list[tuple[str, int]]]:
    """Split ``[[a, b], [c, d]]`` into cells, each with its character offset in ``text``."""
    i = 0
    n = len(text)

    def err(msg: str, at: int) -> SpecError:
        return SpecError(msg, section, key, len(text[:at].encode("utf-8")))

    def skip_ws(j: int) -> int:
        while j < n and text[j].isspace():
            j += 1
        return j

    i = skip_ws(i)
    if i >= n or text[i] != "[":
        raise err("expected '[' to open a matrix", i)
    i += 1
    rows: list[list[tuple[str, int]]] = []
    while True:
        i = skip_ws(i)
        if i < n and text[i] == "]" and not rows:
            raise err("empty matrix", i)
        if i >= n or text[i] != "[":
            raise err("expected '[' to open a row", i)
        i += 1
        row: list[tuple[str, int]] = []
        start = i
        while True:
            if i >= n:
                raise err("unbalanced brackets: row not closed", i)
            ch = text[i]
            if ch in ",]":
                cell = text[start:i]
                if not cell.strip():
                    raise err("empty matrix entry", start)
                lead = len(cell) - len(cell.lstrip())
                row.append((cell.strip(), start + lead))
                i += 1
                if ch == "]":
                    break
                start = i
            elif ch == "[":
                raise err("unexpected '[' inside a row", i)
            else:
                i += 1
        rows.append(row)
        i = skip_ws(i)
        if i >= n:
            raise err("unbalanced brackets: matrix not closed", i)
        if text[i] == ",":
            i += 1
            continue
        if text[i] == "]":
            i += 1
            break
        raise err(f"unexpected {text[i]!r} between rows", i)
    i = skip_ws(i)
    if i < n:
        raise err(f"trailing text after matrix: {text[i:]!r}", i)
    return rows


def _parse_cell(cell: str, offset: int, text: str, section: str, key: str) -> Expression:
    try:
        return exprlang.parse(cell)
    except ExprSyntaxError as e:
        at = len(text[:offset].encode("utf-8")) + e.offset
        raise SpecError(f"expression error: {e}", section, key, at) from None


def parse_expr_matrix(text: str, section: str, key: str) -> list[list[Expression]]:
    return [[_parse_cell(c, off, text, section, key) for c, off in row]
            for row in parse_matrix(text, section, key)]


def _parse_expr(text: str, section: str, key: str) -> Expression:
    stripped = text.strip()
    return _parse_cell(stripped, text.find(stripped), text, section, key)


# -- loader -------------------------------------------------------------------------------

def _reader() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=None, default_section="\x00defaults")
    cp.optionxform = str  # keep key case
    return cp


def _require(sec: configparser.SectionProxy, key: str, section: str) -> str:
    if key not in sec:
        raise SpecError(f"missing key {key!r}", section)
    return sec[key]


def _int(sec, key, section, default=None) -> int:
    raw = sec.get(key)
    if raw is None:
        if default is None:
            raise SpecError(f"missing key {key!r}", section)
        return default
    try:
        return int(raw.strip())
    except ValueError:
        raise SpecError(f"expected an integer, got {raw!r}", section, key) from None


def _params(sec, section) -> MetallicParams:
    p = _int(sec, "p", section, 1)
    q = _int(sec, "q", section, 1)
    if p < 1 or q < 1:
        raise SpecError("p and q must be positive integers", section)
    return MetallicParams(p, q)


def _const_value(expr: Expression, section: str, key: str) -> float:
    if not exprlang.is_constant(expr):
        raise SpecError("domain bounds must be constant", section, key)
    return exprlang.eval(expr, {})


def _load_manifold(name: str, sec, section: str) -> Chart:
    coords = [c.strip() for c in _require(sec, "coords", section).split(",") if c.strip()]
    if not coords:
        raise SpecError("no coordinates", section, "coords")
    for c in coords:
        if not c.isidentifier() or c in exprlang.CONSTANTS or c in exprlang.FUNCTIONS:
            raise SpecError(f"invalid coordinate name {c!r}", section, "coords")
    if "dim" in sec and _int(sec, "dim", section) != len(coords):
        raise SpecError(f"dim does not match {len(coords)} coordinates", section, "dim")
    dom_text = _require(sec, "domain", section)
    dom = parse_expr_matrix(dom_text, section, "domain")
    if len(dom) != len(coords) or any(len(r) != 2 for r in dom):
        raise SpecError(f"domain needs {len(coords)} rows of [min, max]", section, "domain")
    domain = []
    for c, (lo_e, hi_e) in zip(coords, dom):
        lo, hi = _const_value(lo_e, section, "domain"), _const_value(hi_e, section, "domain")
        if not lo < hi:
            raise SpecError(f"empty domain for {c}: min {lo} >= max {hi}", section, "domain")
        domain.append((lo, hi))
    metric = parse_expr_matrix(_require(sec, "metric", section), section, "metric")
    d = len(coords)
    if len(metric) != d or any(len(r) != d for r in metric):
        raise SpecError(f"metric must be {d}x{d}", section, "metric")
    for row in metric:
        for e in row:
            extra = exprlang.free_vars(e) - set(coords)
            if extra:
                raise SpecError(f"metric uses unknown variables {sorted(extra)}", section, "metric")
    try:
        return Chart(name, tuple(coords), tuple(domain), tuple(tuple(r) for r in metric))
    except MetwarpError as e:
        raise SpecError(str(e), section) from None


def loads(text: str, origin: str = "<text>") -> SpecFile:
    cp = _reader()
    try:
        cp.read_string(text, source=origin)
    except configparser.Error as e:
        raise SpecError(f"malformed spec file: {e}") from None

    charts: dict[str, Chart] = {}
    warp: WarpedProduct | None = None
    raw_structures: list[tuple[str, str, configparser.SectionProxy]] = []
    raw_maps: list[tuple[str, str, configparser.SectionProxy]] = []
    suites: list[SuiteRequest] = []

    for section in cp.sections():
        head, _, name = section.partition(" ")
        name = name.strip()
        sec = cp[section]
        if head == "manifold":
            if not name:
                raise SpecError("manifold needs a name", section)
            charts[name] = _load_manifold(name, sec, section)
        elif head == "warp":
            continue
        elif head == "structure":
            if not name:
                raise SpecError("structure needs a name", section)
            raw_structures.append((name, section, sec))
        elif head == "map":
            if not name:
                raise SpecError("map needs a name", section)
            raw_maps.append((name, section, sec))
        elif head == "suite":
            from .suites import SUITES  # registry lives with the suite code
            if name not in SUITES:
                raise SpecError(f"unknown suite {name!r}", section)
            suites.append(SuiteRequest(name, {k: v for k, v in sec.items()}))
        else:
            raise SpecError(f"unknown section kind {head!r}", section)

    if cp.has_section("warp"):
        sec = cp["warp"]
        base_name = _require(sec, "base", "warp").strip()
        fiber_name = _require(sec, "fiber", "warp").strip()
        for key, ref in (("base", base_name), ("fiber", fiber_name)):
            if ref not in charts:
                raise SpecError(f"dangling reference to manifold {ref!r}", "warp", key)
        f = _parse_expr(_require(sec, "f", "warp"), "warp", "f")
        pname = sec.get("name", "product").strip()
        if pname in charts:
            raise SpecError(f"product name {pname!r} clashes with a manifold", "warp", "name")
        try:
            warp = WarpedProduct(charts[base_name], charts[fiber_name], f, pname)
        except MetwarpError as e:
            raise SpecError(str(e), "warp") from None
        charts[pname] = warp.chart

    structures: dict[str, StructureDef] = {}
    for name, section, sec in raw_structures:
        params = _params(sec, section)
        if "matrix" in sec:
            chart_name = _require(sec, "chart", section).strip()
            if chart_name not in charts:
                raise SpecError(f"dangling reference to chart {chart_name!r}", section, "chart")
            chart = charts[chart_name]
            mat = parse_expr_matrix(sec["matrix"], section, "matrix")
            try:
                fld = OperatorField(chart, tuple(tuple(r) for r in mat), params)
            except MetwarpError as e:
                raise SpecError(str(e), section, "matrix") from None
            structures[name] = StructureDef(name, "matrix", params, chart_name, fld)
            continue
        kind = sec.get("kind", "").strip()
        if kind not in STRUCTURE_KINDS[1:]:
            raise SpecError(f"structure needs a matrix or kind in {STRUCTURE_KINDS[1:]}", section, "kind")
        if warp is None:
            raise SpecError(f"kind {kind} requires a [warp] section", section, "kind")
        if kind == "pair":
            structures[name] = StructureDef(name, kind, params, warp.name,
                                            base=_require(sec, "base", section).strip(),
                                            fiber=_require(sec, "fiber", section).strip())
        else:
            structures[name] = StructureDef(name, kind, params, warp.name)

    for s in structures.values():
        if s.kind != "pair":
            continue
        section = f"structure {s.name}"
        for key, ref, want in (("base", s.base, warp.base), ("fiber", s.fiber, warp.fiber)):
            if ref not in structures:
                raise SpecError(f"dangling reference to structure {ref!r}", section, key)
            if structures[ref].field is None or structures[ref].field.chart != want:
                raise SpecError(f"structure {ref!r} is not an operator on the {key}", section, key)

    maps: dict[str, MapDef] = {}
    for name, section, sec in raw_maps:
        src = _require(sec, "source", section).strip()
        tgt = _require(sec, "target", section).strip()
        for key, ref in (("source", src), ("target", tgt)):
            if ref not in charts:
                raise SpecError(f"dangling reference to chart {ref!r}", section, key)
        comps_text = _require(sec, "components", section)
        rows = parse_expr_matrix(f"[{comps_text.strip()}]" if not comps_text.strip().startswith("[[")
                                 else comps_text, section, "components")
        comps = [e for row in rows for e in row]
        try:
            cmap = CoordinateMap(charts[src], charts[tgt], tuple(comps))
        except MetwarpError as e:
            raise SpecError(str(e), section, "components") from None
        js = []
        for key in ("J1", "J2"):
            ref = sec.get(key)
            if ref is not None:
                ref = ref.strip()
                if ref not in structures:
                    raise SpecError(f"dangling reference to structure {ref!r}", section, key)
            js.append(ref)
        maps[name] = MapDef(name, cmap, js[0], js[1])

    return SpecFile(charts, warp, structures, maps, suites, origin)


def load_spec(path: str | Path) -> SpecFile:
    """Load a spec file, or a built-in spec addressed as ``builtin:<name>?k=v&...``."""
    path = str(path)
    if path.startswith("builtin:"):
        from .builtins import builtin_spec_text
        text, origin = builtin_spec_text(path[len("builtin:"):]), path
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise SpecError(f"cannot read spec file {path!r}: {e.strerror or e}") from None
        origin = path
    return loads(text, origin)
