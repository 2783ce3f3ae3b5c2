import pytest

from metwarp import load_spec, loads
from metwarp.builtins import BUILTINS
from metwarp.errors import SpecError

POLAR = """
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

[map p1]
source = P
target = B
components = [u]

[suite lemma-curvature]
"""


def test_polar_spec_loads():
    spec = loads(POLAR)
    assert spec.warp.name == "P"
    assert spec.warp.n == 1 and spec.warp.m == 1
    assert set(spec.manifolds) == {"B", "F"}
    assert set(spec.charts) == {"B", "F", "P"}
    assert spec.structures["J1"].kind == "matrix"
    assert spec.maps["p1"].map.target.name == "B"
    assert [s.name for s in spec.suites] == ["lemma-curvature"]


def test_unbalanced_matrix_has_location():
    text = POLAR.replace("metric = [[1]]\n\n[manifold F]", "metric = [[1,0],[0,1]\n\n[manifold F]")
    with pytest.raises(SpecError) as info:
        loads(text)
    err = info.value
    assert err.section == "manifold B" and err.key == "metric"
    assert err.offset == len("[[1,0],[0,1]")
    assert "unbalanced" in str(err)


def test_bad_expression_offset():
    text = POLAR.replace("matrix = [[sigma]]", "matrix = [[sigma +* 2]]")
    with pytest.raises(SpecError) as info:
        loads(text)
    assert info.value.key == "matrix"
    assert info.value.offset == len("[[sigma +")  # the "*"


def test_dangling_chart():
    with pytest.raises(SpecError) as info:
        loads(POLAR.replace("chart = B", "chart = M3"))
    assert "M3" in str(info.value) and info.value.key == "chart"


def test_dangling_warp_and_map_references():
    with pytest.raises(SpecError):
        loads(POLAR.replace("fiber = F", "fiber = G"))
    with pytest.raises(SpecError):
        loads(POLAR.replace("target = B", "target = Q"))
    with pytest.raises(SpecError):
        loads(POLAR.replace("components = [u]", "components = [u]\nJ1 = nope"))


def test_empty_domain():
    with pytest.raises(SpecError) as info:
        loads(POLAR.replace("domain = [[0.5, 3]]", "domain = [[3, 3]]"))
    assert info.value.section == "manifold B"


def test_unknown_suite_and_section():
    with pytest.raises(SpecError):
        loads(POLAR + "\n[suite no-such-suite]\n")
    with pytest.raises(SpecError):
        loads(POLAR + "\n[widget x]\n")


def test_foreign_variables_rejected():
    with pytest.raises(SpecError):
        loads(POLAR.replace("matrix = [[sigma]]", "matrix = [[a]]"))
    with pytest.raises(SpecError):
        loads(POLAR.replace("f = u", "f = a"))


def test_missing_file():
    with pytest.raises(SpecError):
        load_spec("/nonexistent/spec.ini")


def test_file_round_trip(tmp_path):
    path = tmp_path / "polar.ini"
    path.write_text(POLAR, encoding="utf-8")
    assert load_spec(path).origin == str(path)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtins_load(name):
    spec = load_spec(f"builtin:{name}")
    assert spec.suites


def test_builtin_addressing():
    a = load_spec("builtin:example3?n=3&k=2&p=2&q=1")
    b = load_spec("builtin:example3:n=3,k=2,p=2,q=1")
    assert a.suite_params("example3") == b.suite_params("example3")
    assert a.warp.m == 3
    with pytest.raises(SpecError):
        load_spec("builtin:nope")
    with pytest.raises(SpecError):
        load_spec("builtin:example3?n=x")
    with pytest.raises(SpecError):
        load_spec("builtin:plane-exp?axis=z")
