"""JSON command line over scenes.

A scene is the environment format of :mod:`l2fusion.diagram` (algebras,
homomorphisms, bimodules, bindings) plus optional ``functionals`` and
``diagrams``.  Every subcommand prints one JSON object carrying the tool
version, the seed and the tolerances it used.

Exit status: 0 when every requested assertion holds, 1 when one fails,
2 on malformed input (the JSON then has an ``error`` key).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import Functional, canonical_embedding
from .bimodule import Bimodule, fuse, fuse_object, l2_bimodule, random_bilinear, rebracket
from .diagram import (
    TRIVIAL,
    Environment,
    corpus,
    evaluate,
    parse,
    run_document,
    run_file,
    type_error_fixtures,
    typecheck,
)
from .duality import NORMALIZATION_TOL, ZIGZAG_TOL, canonical_duality, normalize, skew, statistical_dimension
from .errors import DiagramSyntaxError, DiagramTypeError, L2FusionError
from .functor import inclusion_duality, l2_of_hom, phi_report
from .index import dim_matrix, index_report
from .numerics import fro, unitarity_residual

DEFAULT_SEED = 20240611
SCENES = Path(__file__).parent / "data" / "scenes"
COMMANDS = ("dim", "index", "fuse", "normalize", "eval", "l2map", "check")


class InputError(ValueError):
    """Bad command line or scene contents."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


# scenes -----------------------------------------------------------------------------


class Scene:
    def __init__(self, data: dict, seed: int):
        if not isinstance(data, dict):
            raise InputError("a scene must be a JSON object")
        self.data = data
        self.env = Environment.from_json(data, seed)
        self.homs = {}
        for name, spec in data.get("homomorphisms", {}).items():
            try:
                src, tgt = spec["source"], spec["target"]
                self.homs[name] = canonical_embedding(self.env.algebra(src), self.env.algebra(tgt), spec["multiplicities"])
            except KeyError as exc:
                raise InputError(f"homomorphism {name!r}: missing or unknown {exc}") from exc
        self.functionals = {}
        for name, spec in data.get("functionals", {}).items():
            A = self.env.algebra(spec["algebra"])
            phi = Functional(A, tuple(_complex(b) for b in spec["densities"]))
            if not phi.is_positive:
                raise InputError(f"functional {name!r} is not positive")
            self.functionals[name] = phi
        self.diagrams = dict(data.get("diagrams", {}))

    @classmethod
    def load(cls, ref: str, seed: int) -> "Scene":
        path = Path(ref)
        if not path.exists():
            bundled = SCENES / f"{ref}.json"
            if not bundled.exists():
                raise InputError(f"no scene file {ref!r}")
            path = bundled
        return cls(json.loads(path.read_text(encoding="utf-8")), seed)

    def bimodule(self, name: str) -> Bimodule:
        if name not in self.env.bimodules:
            raise InputError(f"unknown bimodule {name!r}")
        return self.env.bimodules[name][0]

    def pick_hom(self, name: str | None):
        if name is None:
            if len(self.homs) != 1:
                raise InputError(f"scene has {len(self.homs)} homomorphisms; pass --name")
            name = next(iter(self.homs))
        if name not in self.homs:
            raise InputError(f"unknown homomorphism {name!r}")
        return name, self.homs[name]


def _complex(values) -> np.ndarray:
    if isinstance(values, dict):
        return np.asarray(values["re"], dtype=float) + 1j * np.asarray(values.get("im", 0.0), dtype=float)
    return np.asarray(values, dtype=complex)


def _matrix(m: np.ndarray) -> dict:
    m = np.asarray(m)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def _real(m: np.ndarray):
    m = np.asarray(m)
    if np.iscomplexobj(m):
        m = m.real
    if np.allclose(m, np.round(m), atol=1e-9):
        return np.round(m).astype(int).tolist()
    return m.tolist()


# subcommands ------------------------------------------------------------------------


def cmd_dim(args, scene: Scene) -> tuple[dict, bool]:
    if args.name in scene.env.bimodules:
        D = canonical_duality(scene.bimodule(args.name))
        return {"name": args.name, "dim": statistical_dimension(D).tolist()}, True
    if args.name is None and len(scene.homs) > 1:
        return {"dim": {n: _real(dim_matrix(f)) for n, f in scene.homs.items()}}, True
    name, f = scene.pick_hom(args.name)
    return {"name": name, "dim": _real(dim_matrix(f))}, True


def cmd_index(args, scene: Scene) -> tuple[dict, bool]:
    name, f = scene.pick_hom(args.name)
    rep = index_report(f, rng=np.random.default_rng(args.seed)).to_json()
    return {"name": name, **rep}, True


def cmd_fuse(args, scene: Scene) -> tuple[dict, bool]:
    names = args.names or scene.data.get("fuse")
    if not names or len(names) < 2:
        raise InputError("fuse needs at least two bimodule names")
    mods = [scene.bimodule(n) for n in names]
    stages = []
    acc = mods[0]
    for n, K in zip(names[1:], mods[1:]):
        if acc.right != K.left:
            raise InputError(f"cannot fuse over {acc.right!r} and {K.left!r} at {n!r}")
        res = fuse(acc, K)
        g = res.gram
        unit_l = rebracket(fuse_object(l2_bimodule(acc.left), acc), acc).matrix
        unit_r = rebracket(fuse_object(acc, l2_bimodule(acc.right)), acc).matrix
        stages.append(
            {
                "multiplicities": res.object.m.tolist(),
                "dim": res.object.dim,
                "gram_rank": g.rank,
                "gram_unitarity": g.unitarity_residual,
                "unitor_residual": max(unitarity_residual(unit_l), unitarity_residual(unit_r)),
            }
        )
        acc = res.object
    out = {"names": list(names), "stages": stages, "multiplicities": acc.m.tolist()}
    ok = all(s["gram_rank"] == s["dim"] and max(s["gram_unitarity"], s["unitor_residual"]) <= args.tol for s in stages)
    if len(mods) == 3:
        left = fuse_object(fuse_object(*mods[:2]), mods[2])
        right = fuse_object(mods[0], fuse_object(*mods[1:]))
        out["associator_residual"] = unitarity_residual(rebracket(left, right).matrix)
        ok = ok and out["associator_residual"] <= args.tol
    out["passed"] = ok
    return out, ok


def cmd_normalize(args, scene: Scene) -> tuple[dict, bool]:
    if args.name is None:
        raise InputError("normalize needs --name of a bimodule")
    H = scene.bimodule(args.name)
    D = canonical_duality(H)
    if args.skew:
        D = skew(D, random_bilinear(H, H, np.random.default_rng(args.seed)))
    before = D.check()
    N, x = normalize(D.H, D.Hbar, D.R, D.S)
    after = N.check()
    ok = after.zigzag_ok and after.normalized
    return {
        "name": args.name,
        "before": before._asdict(),
        "after": after._asdict(),
        "statistical_dimension": statistical_dimension(N).tolist(),
        "passed": ok,
    }, ok


def _diagram_text(args, scene: Scene) -> str:
    d = args.diagram
    if d is None:
        raise InputError("eval needs --diagram")
    if d in scene.diagrams:
        return scene.diagrams[d]
    if Path(d).is_file():
        return Path(d).read_text(encoding="utf-8")
    return d


def cmd_eval(args, scene: Scene) -> tuple[dict, bool]:
    text = _diagram_text(args, scene)
    if any(w in text.split() for w in ("assert", "let", "check")):
        outs = run_document(text, scene.env, args.tol)
        rows = [o._asdict() for o in outs]
        ok = all(o.passed for o in outs)
        return {"statements": rows, "passed": ok}, ok
    term = parse(text)
    bd = typecheck(term, scene.env)
    m = evaluate(term, scene.env)
    out = {
        "source": str(bd.source),
        "target": str(bd.target),
        "linearity": bd.linearity,
        "coercions": list(bd.log),
        "matrix": _matrix(m),
    }
    ok = True
    if args.assert_identity:
        res = fro(m - np.eye(m.shape[0])) if bd.source == bd.target else float("inf")
        ok = res <= args.tol
        out["identity_residual"] = res
        out["passed"] = ok
    return out, ok


def cmd_l2map(args, scene: Scene) -> tuple[dict, bool]:
    name, f = scene.pick_hom(args.name)
    L = l2_of_hom(f)
    rep = phi_report(inclusion_duality(f)) if not np.any(f.multiplicities.sum(axis=1) == 0) else None
    out = {
        "name": name,
        "matrix": _matrix(L.matrix),
        "scales": L.scales.tolist(),
        "scale_squared": (L.scales**2).tolist(),
        "defects": L.defects.tolist(),
    }
    if rep is not None:
        out["phi"] = rep
    ok = float(L.defects.max(initial=0.0)) <= max(args.tol, 1e-8)
    return out, ok


# check suites -----------------------------------------------------------------------


def _suite_paths(name: str) -> tuple[list[Path], list[Path]]:
    docs = {p.stem: p for p in corpus()}
    if name in ("all", "corpus"):
        return list(docs.values()), type_error_fixtures() if name == "all" else []
    if name == "errors":
        return [], type_error_fixtures()
    if name in docs:
        return [docs[name]], []
    raise InputError(f"unknown suite {name!r}; choose from {sorted(docs) + ['all', 'corpus', 'errors', 'invariants']}")


def _scene_invariants(scene: Scene, tol: float) -> list[dict]:
    rows = []
    for name, (H, _, _) in scene.env.bimodules.items():
        if name == TRIVIAL or not H.dim:
            continue
        rep = canonical_duality(H).check()
        rows.append({"check": f"duality {name}", "passed": rep.zigzag_ok and rep.normalized, "residual": max(rep.zigzag_h, rep.zigzag_hbar, rep.normalization)})
    for name, f in scene.homs.items():
        L = l2_of_hom(f)
        rows.append({"check": f"l2 scaling {name}", "passed": float(L.defects.max(initial=0.0)) <= 1e-8, "residual": float(L.defects.max(initial=0.0))})
        p = phi_report(inclusion_duality(f))
        r = max(p["unitarity"], p["square"])
        rows.append({"check": f"phi {name}", "passed": r <= 1e-8, "residual": r})
    return rows


def cmd_check(args, scene: Scene | None) -> tuple[dict, bool]:
    rows = []
    if args.suite == "invariants":
        if scene is None:
            raise InputError("the invariants suite needs --scene")
        rows = _scene_invariants(scene, args.tol)
    else:
        docs, fixtures = _suite_paths(args.suite)
        for path in docs:
            for o in run_file(path, seed=args.seed, tol=args.tol):
                rows.append({"check": f"{path.stem}:{o.line} {o.text}", "passed": o.passed, "residual": o.residual})
        for path in fixtures:
            try:
                run_file(path, seed=args.seed, tol=args.tol)
                rows.append({"check": f"type error {path.stem}", "passed": False, "residual": None})
            except DiagramTypeError as exc:
                rows.append({"check": f"type error {path.stem}", "passed": True, "residual": None, "detail": str(exc)})
        if args.suite == "all" and scene is not None:
            rows += _scene_invariants(scene, args.tol)
    passed = sum(r["passed"] for r in rows)
    ok = passed == len(rows)
    return {"suite": args.suite, "passed": passed, "failed": len(rows) - passed, "results": rows}, ok


# entry point ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="l2fusion", description="Bimodule, fusion and index computations on JSON scenes.")
    p.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--scene", help="scene file, or the stem of a bundled scene")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--json-indent", type=int, default=None)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd in ("dim", "index", "l2map", "normalize"):
        s = sub.add_parser(cmd, parents=[common])
        s.add_argument("--name")
        if cmd == "normalize":
            s.add_argument("--skew", action="store_true", help="rescale the canonical pair by a random invertible first")
    s = sub.add_parser("fuse", parents=[common])
    s.add_argument("names", nargs="*")
    s = sub.add_parser("eval", parents=[common])
    s.add_argument("--env", dest="scene", help="alias of --scene")
    s.add_argument("--diagram", help="diagram text, a file, or a name under the scene's diagrams")
    s.add_argument("--assert-identity", action="store_true")
    s = sub.add_parser("check", parents=[common])
    s.add_argument("--suite", default="all")
    return p


HANDLERS = {
    "dim": cmd_dim,
    "index": cmd_index,
    "fuse": cmd_fuse,
    "normalize": cmd_normalize,
    "eval": cmd_eval,
    "l2map": cmd_l2map,
    "check": cmd_check,
}


def run(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    indent = None
    try:
        args = build_parser().parse_args(argv)
        indent = args.json_indent
        if args.seed < 0 or args.seed >= 2**64:
            raise InputError("--seed must fit in an unsigned 64-bit integer")
        scene = Scene.load(args.scene, args.seed) if args.scene else None
        if scene is None and args.command != "check":
            raise InputError(f"{args.command} needs --scene")
        report, ok = HANDLERS[args.command](args, scene)
        code = 0 if ok else 1
        body = {
            "version": __version__,
            "command": args.command,
            "seed": args.seed,
            "tolerances": {"tol": args.tol, "zigzag": ZIGZAG_TOL, "normalization": NORMALIZATION_TOL},
            **report,
        }
    except SystemExit as exc:  # --version and --help
        return int(exc.code or 0)
    except (InputError, L2FusionError, DiagramSyntaxError, DiagramTypeError, KeyError, TypeError, ValueError, OSError) as exc:
        body = {"version": __version__, "error": type(exc).__name__, "message": str(exc)}
        code = 2
    stdout.write(json.dumps(body, indent=indent, default=_fallback) + "\n")
    return code


def _fallback(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def main() -> None:
    sys.exit(run())
