import io
import json
import subprocess
import sys

import numpy as np
import pytest

from l2fusion import __version__
from l2fusion.cli import run


def call(*argv):
    buf = io.StringIO()
    code = run(list(argv), stdout=buf)
    return code, json.loads(buf.getvalue())


@pytest.fixture
def scene_file(tmp_path):
    def write(data):
        p = tmp_path / "scene.json"
        p.write_text(json.dumps(data))
        return str(p)

    return write


def test_dim_of_c_in_m3():
    code, out = call("dim", "--scene", "c_in_m3")
    assert code == 0 and out["dim"] == [[3]]
    assert out["version"] == __version__ and out["tolerances"]["tol"] == 1e-9


def test_dim_of_bimodule_is_statistical_dimension():
    code, out = call("dim", "--scene", "duality", "--name", "H")
    assert code == 0
    d = np.array(out["dim"])
    # statistical dimensions vanish exactly where the multiplicity does
    assert d.shape == (2, 3) and ((d > 0) == (np.array([[1, 0, 2], [1, 1, 0]]) > 0)).all()


def test_dim_lists_every_homomorphism():
    code, out = call("dim", "--scene", "tower")
    assert code == 0 and set(out["dim"]) == {"f", "g"}


def test_index_report_keys():
    code, out = call("index", "--scene", "c_in_m3")
    assert code == 0
    assert out["minimal_index"] == pytest.approx(9)
    assert out["pp_index"] == pytest.approx(3, abs=1e-6)


def test_l2map_scaling():
    code, out = call("l2map", "--scene", "c_in_m3")
    assert code == 0
    assert out["scale_squared"] == [pytest.approx(3)]
    assert out["phi"]["unitarity"] < 1e-8


def test_fuse_reports_residuals():
    code, out = call("fuse", "--scene", "duality", "H", "Hbar", "H")
    assert code == 0 and out["passed"]
    assert all(s["gram_rank"] == s["dim"] for s in out["stages"])
    assert out["associator_residual"] < 1e-12


def test_fuse_rejects_mismatched_middle():
    code, out = call("fuse", "--scene", "duality", "H", "H")
    assert code == 2 and "cannot fuse" in out["message"]


def test_normalize_recovers_from_skew():
    code, out = call("normalize", "--scene", "duality", "--name", "H", "--skew")
    assert code == 0
    assert not out["before"]["normalized"] and out["after"]["normalized"]


def test_eval_zigzag_assert_identity():
    code, out = call("eval", "--env", "duality", "--diagram", "left_zigzag", "--assert-identity")
    assert code == 0 and out["identity_residual"] < 1e-9


def test_eval_non_identity_exits_one():
    code, out = call("eval", "--scene", "duality", "--diagram", "S ; S*", "--assert-identity")
    assert code == 1 and not out["passed"]


def test_eval_document(scene_file, tmp_path):
    doc = tmp_path / "d.vnd"
    doc.write_text("assert R ; R* == R ; R*\nassert R ; R* == id(A)\n")
    code, out = call("eval", "--scene", "duality", "--diagram", str(doc))
    assert code == 1
    assert [s["passed"] for s in out["statements"]] == [True, False]


def test_check_zigzag_suite():
    code, out = call("check", "--suite", "zigzag")
    assert code == 0 and out["failed"] == 0 and out["passed"] >= 4


def test_check_all_includes_fixtures():
    code, out = call("check")
    assert code == 0
    assert sum(r["check"].startswith("type error") for r in out["results"]) == 2


def test_check_invariants_on_scene():
    code, out = call("check", "--suite", "invariants", "--scene", "tower")
    assert code == 0 and out["failed"] == 0


@pytest.mark.parametrize(
    "argv",
    [
        ["dim"],
        ["frobnicate"],
        ["dim", "--scene", "no-such-scene"],
        ["eval", "--scene", "duality", "--diagram", "(R"],
        ["eval", "--scene", "duality", "--diagram", "R ; S"],
        ["check", "--suite", "nope"],
        ["dim", "--scene", "c_in_m3", "--seed", "-1"],
    ],
)
def test_malformed_input_exits_two(argv):
    code, out = call(*argv)
    assert code == 2 and "error" in out and "message" in out


def test_malformed_scene_contents(scene_file):
    code, out = call("dim", "--scene", scene_file({"algebras": {"A": [0]}}))
    assert code == 2
    code, out = call("dim", "--scene", scene_file({"algebras": {"A": [1]}, "homomorphisms": {"f": {"source": "A"}}}))
    assert code == 2
    bad = {"algebras": {"A": [2]}, "functionals": {"phi": {"algebra": "A", "densities": [[[1, 0], [0, -1]]]}}}
    code, out = call("dim", "--scene", scene_file(bad))
    assert code == 2 and "not positive" in out["message"]


def test_not_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{nope")
    code, out = call("dim", "--scene", str(p))
    assert code == 2


def test_output_is_deterministic_for_a_seed():
    a = call("normalize", "--scene", "duality", "--name", "H", "--skew", "--seed", "7")
    b = call("normalize", "--scene", "duality", "--name", "H", "--skew", "--seed", "7")
    c = call("normalize", "--scene", "duality", "--name", "H", "--skew", "--seed", "8")
    assert a == b and a[1]["before"] != c[1]["before"]


def test_json_indent_and_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "l2fusion", "dim", "--scene", "c_in_m3", "--json-indent", "2"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("{\n  ")
    assert json.loads(proc.stdout)["dim"] == [[3]]
