import json

import numpy as np
import pytest

from l2fusion.algebra import Algebra, canonical_embedding
from l2fusion.bimodule import BimoduleMap, fuse_maps, rebracket, fuse_object
from l2fusion.diagram import (
    Binding,
    Environment,
    Gen,
    HComp,
    Id,
    Obj,
    VComp,
    corpus,
    evaluate,
    parse,
    parse_document,
    run_document,
    run_file,
    type_error_fixtures,
    typecheck,
)
from l2fusion.errors import AlgebraMismatch, DiagramSyntaxError, DiagramTypeError, DimensionMismatch
from l2fusion.functor import l2_of_hom
from l2fusion.numerics import fro


def env_data(**extra):
    data = {
        "seed": 5,
        "algebras": {"A": [1, 2], "B": [2]},
        "bimodules": {
            "H": {"left": "A", "right": "B", "multiplicities": [[1], [2]]},
            "Hbar": {"conjugate": "H"},
        },
        "bindings": {
            "R": {"duality": "canonical", "of": "H"},
            "S": {"duality": "canonical", "of": "H"},
            "x": {"random_endomorphism": "H"},
        },
    }
    for key, value in extra.items():
        data[key] = {**data.get(key, {}), **value}
    return data


@pytest.fixture
def env():
    return Environment.from_json(env_data())


ZIGZAG = "(id(H) | S) ; (R* | id(H))"


# parsing ------------------------------------------------------------------------------


def test_parse_vertical():
    assert parse("R* ; R") == VComp(Gen("R*"), Gen("R"))


def test_parse_zigzag_shape():
    t = parse(ZIGZAG)
    assert t == VComp(HComp(Id(("H",)), Gen("S")), HComp(Gen("R*"), Id(("H",))))


def test_parse_precedence_and_double_adjoint():
    assert parse("a | b ; c") == VComp(HComp(Gen("a"), Gen("b")), Gen("c"))
    assert parse("R**") == Gen("R")
    assert parse("id(H, Hbar)") == Id(("H", "Hbar"))


@pytest.mark.parametrize(
    "text,line,col",
    [("R* ;", 1, 5), ("(R ; S", 1, 7), ("R |\n| S", 2, 1), ("(R)*", 1, 4), ("R $ S", 1, 3), ("id()", 1, 4)],
)
def test_syntax_errors_carry_position(text, line, col):
    with pytest.raises(DiagramSyntaxError) as info:
        parse(text)
    assert (info.value.line, info.value.column) == (line, col)


def test_document_statements_and_continuation():
    doc = "# comment\nlet z = (x ;\n   x)\nassert z == x\ncheck id(H)\nassert scalar R ; R* == scalar S ; S*\n"
    st = parse_document(doc)
    assert [type(s).__name__ for s in st] == ["Let", "Assert", "Check", "Assert"]
    assert st[0].term == VComp(Gen("x"), Gen("x"))
    assert st[3].scalar and st[1].line == 4


def test_document_rejects_junk():
    with pytest.raises(DiagramSyntaxError):
        parse_document("assert x x == x")
    with pytest.raises(DiagramSyntaxError):
        parse_document("frobnicate x")


# typing ---------------------------------------------------------------------------------


def test_zigzag_boundary(env):
    bd = typecheck(parse(ZIGZAG), env)
    assert bd.source == bd.target == Obj(("H",), "A", "B")
    assert bd.linearity == "bilinear"
    # S and R* sit next to H: one unitor on each side, one associator for S's output
    assert any(c.startswith("unitor") for c in bd.log) and any(c.startswith("associator") for c in bd.log)


def test_vertical_mismatch(env):
    with pytest.raises(DiagramTypeError, match="does not match"):
        typecheck(parse("R ; S"), env)


def test_unbound_and_unknown_wire(env):
    with pytest.raises(DiagramTypeError, match="unbound"):
        typecheck(parse("nope"), env)
    with pytest.raises(DiagramTypeError, match="unknown wire"):
        typecheck(parse("id(K)"), env)
    with pytest.raises(DiagramTypeError, match="meet over"):
        typecheck(parse("id(H, H)"), env)


def test_forbidden_assemblies_raise():
    fixtures = type_error_fixtures()
    assert len(fixtures) == 2
    for path in fixtures:
        with pytest.raises(DiagramTypeError):
            run_file(path)


def test_vectors_over_trivial_region_compose():
    data = {
        "algebras": {"B": [2]},
        "bimodules": {"H": {"left": "C", "right": "C", "multiplicities": [[2]]}, "K": {"left": "C", "right": "B", "multiplicities": [[1]]}},
        "bindings": {"xi": {"vector": "H"}, "eta": {"vector": "K"}},
    }
    env = Environment.from_json(data)
    m = evaluate(parse("xi | eta"), env)
    want = np.kron(env.bindings["xi"].matrix, env.bindings["eta"].matrix)
    assert fro(m - want) < 1e-12


def test_one_sided_box_needs_trivial_neighbour(env):
    # a left multiplier by A is only right-linear: fine on the left edge, not in the middle
    env2 = env.bind("a", Binding(Obj((), "A", "A"), Obj((), "A", "A"), np.eye(5), "right", "element"))
    typecheck(parse("a | id(H)"), env2)
    env3 = env.bind("b", Binding(Obj((), "B", "B"), Obj((), "B", "B"), np.eye(4), "right", "element"))
    with pytest.raises(DiagramTypeError, match="not left-linear"):
        typecheck(parse("id(H) | b"), env3)


# evaluation ------------------------------------------------------------------------------


def test_identity_and_zigzag(env):
    H = env.realize(Obj(("H",), "A", "B"))
    assert fro(evaluate(parse("id(H)"), env) - np.eye(H.dim)) == 0
    assert fro(evaluate(parse(ZIGZAG), env) - np.eye(H.dim)) < 1e-9


def test_vertical_is_matrix_product(env):
    a, b = evaluate(parse("R"), env), evaluate(parse("R*"), env)
    assert np.array_equal(evaluate(parse("R ; R*"), env), b @ a)


def test_horizontal_is_fuse_maps_up_to_unitors(env):
    H = env.realize(Obj(("H",), "A", "B"))
    Hb = env.realize(Obj(("Hbar",), "B", "A"))
    x = env.bindings["x"].matrix
    f = BimoduleMap(H, H, x, "bilinear", validate=False)
    g = BimoduleMap(Hb, Hb, np.eye(Hb.dim), "bilinear", validate=False)
    assert fro(evaluate(parse("x | id(Hbar)"), env) - fuse_maps(f, g).matrix) < 1e-12
    # a three-wire object is bracketed to the left; HComp rebrackets explicitly
    m = evaluate(parse("id(H) | (id(Hbar) | x)"), env)
    inner = fuse_maps(g, f)
    outer = fuse_maps(BimoduleMap(H, H, np.eye(H.dim), "bilinear", validate=False), inner)
    left = fuse_object(fuse_object(H, Hb), H)
    right = fuse_object(H, fuse_object(Hb, H))
    want = rebracket(right, left).matrix @ outer.matrix @ rebracket(left, right).matrix
    assert fro(m - want) < 1e-9


def test_left_multiplier_is_left_action(env, rng):
    A = env.algebra("A")
    a = A.random_element(rng)
    data = env_data(bindings={"a": {"element": "A", "blocks": [{"re": b.real.tolist(), "im": b.imag.tolist()} for b in a.blocks]}})
    env2 = Environment.from_json(data)
    H = env2.realize(Obj(("H",), "A", "B"))
    assert fro(evaluate(parse("a | id(H)"), env2) - H.left_action(a)) < 1e-12


def test_l2_map_binding():
    data = {
        "algebras": {"A": [1], "B": [2]},
        "homomorphisms": {"iota": {"source": "A", "target": "B", "multiplicities": [[2]]}},
        "bindings": {"L": {"l2_of": "iota"}},
    }
    env = Environment.from_json(data)
    iota = canonical_embedding(Algebra((1,)), Algebra((2,)), [[2]])
    assert fro(evaluate(parse("L"), env) - l2_of_hom(iota).matrix) < 1e-12
    assert fro(evaluate(parse("L ; L*"), env) - 2 * np.eye(1)) < 1e-9


# environments ---------------------------------------------------------------------------


def test_binding_dimensions_are_checked(env):
    with pytest.raises(DimensionMismatch):
        env.bind("bad", Binding(Obj(("H",), "A", "B"), Obj(("H",), "A", "B"), np.eye(3)))
    with pytest.raises(AlgebraMismatch):
        env.bind("bad", Binding(Obj((), "A", "A"), Obj((), "B", "B"), np.zeros((4, 5)), "bilinear"))


def test_duality_needs_a_conjugate():
    data = env_data()
    data["bimodules"] = {"H": data["bimodules"]["H"]}
    with pytest.raises(AlgebraMismatch, match="conjugate"):
        Environment.from_json(data)


def test_seed_controls_random_bindings():
    a = Environment.from_json(env_data(), seed=1).bindings["x"].matrix
    b = Environment.from_json(env_data(), seed=1).bindings["x"].matrix
    c = Environment.from_json(env_data(), seed=2).bindings["x"].matrix
    assert np.array_equal(a, b) and not np.allclose(a, c)


# documents ------------------------------------------------------------------------------


def test_bundled_corpus_passes():
    names = {p.stem for p in corpus()}
    assert {"zigzag", "normalization", "rotation", "trace"} <= names
    for path in corpus():
        outcomes = run_file(path)
        assert outcomes and all(o.passed for o in outcomes), (path.name, [o for o in outcomes if not o.passed])


def test_skewed_duality_keeps_zigzag_but_breaks_normalization():
    data = env_data(bindings={"R": {"duality": "canonical", "of": "H", "skew": True}, "S": {"duality": "canonical", "of": "H", "skew": True}})
    data["algebras"] = {"A": [2], "B": [3]}
    data["bimodules"]["H"] = {"left": "A", "right": "B", "multiplicities": [[2]]}
    env = Environment.from_json(data)
    zig = run_document(f"assert {ZIGZAG} == id(H)", env)
    norm = run_document("assert scalar R ; (x | id(Hbar)) ; R* == scalar S ; (id(Hbar) | x) ; S*", env)
    assert zig[0].passed and not norm[0].passed


def test_wrong_identity_fails(env):
    out = run_document("assert x == id(H)\nassert (x ; x) == (x ; x)", env)
    assert [o.passed for o in out] == [False, True]


def test_boundary_mismatch_in_assertion(env):
    with pytest.raises(DiagramTypeError, match="different boundaries"):
        run_document("assert R == S", env)


def test_scalar_needs_factor_region(env):
    # A has two blocks, so R ; R* is central but not a scalar
    with pytest.raises(DiagramTypeError, match="factor"):
        run_document("assert scalar R ; R* == scalar S ; S*", env)


def test_lets_expand_with_adjoints(env):
    out = run_document("let r = R ; (x | id(Hbar))\nassert r* == (x* | id(Hbar)) ; R*", env)
    assert out[0].passed


def test_environment_round_trips_through_json(tmp_path):
    path = tmp_path / "env.json"
    path.write_text(json.dumps(env_data()))
    doc = tmp_path / "env.vnd"
    doc.write_text(f"assert {ZIGZAG} == id(H)\n")
    assert run_file(doc)[0].passed
