"""A small textual language for string diagrams.

Terms::

    term   := hcomp (";" hcomp)*          vertical, read top to bottom
    hcomp  := atom ("|" atom)*            horizontal, left to right
    atom   := NAME "*"* | "id" "(" NAME ("," NAME)* ")" | "(" term ")"

``a ; b`` applies ``a`` first.  A trailing ``*`` on a generator is its
adjoint.  ``id(H, K)`` is the identity of ``H (x) K``; ``id(A)`` with an
algebra name is the identity of the empty wire list over ``A``.

Documents (``.vnd`` files) hold one statement per line, with ``#`` comments
and continuation while a parenthesis is open::

    let NAME = term
    assert term == term
    assert scalar term == scalar term
    check term

Objects are flat wire lists; the bracketing is always the left-nested one,
and horizontal composition inserts the canonical associators and unitors
explicitly (they are listed in the ``log`` of a :class:`Boundary`).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import NamedTuple, Union

import numpy as np

from .algebra import Algebra, canonical_embedding
from .bimodule import (
    Bimodule,
    BimoduleMap,
    conjugate,
    fuse_maps,
    fuse_object,
    l2_bimodule,
    random_bilinear,
    random_left_linear,
    random_right_linear,
    rebracket_permutation,
)
from .duality import canonical_duality, skew
from .errors import AlgebraMismatch, DiagramSyntaxError, DiagramTypeError, DimensionMismatch, EvaluationError, L2FusionError
from .l2 import left_operator, right_operator
from .numerics import dagger, fro

TRIVIAL = "C"
DATA = Path(__file__).parent / "data" / "diagrams"


# syntax -------------------------------------------------------------------------------


@dataclass(frozen=True)
class Id:
    wires: tuple[str, ...]
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Gen:
    name: str
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class VComp:
    first: "DiagramTerm"
    second: "DiagramTerm"
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class HComp:
    left: "DiagramTerm"
    right: "DiagramTerm"
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


DiagramTerm = Union[Id, Gen, VComp, HComp]


def unparse(t: DiagramTerm) -> str:
    if isinstance(t, Id):
        return f"id({', '.join(t.wires)})"
    if isinstance(t, Gen):
        return t.name
    if isinstance(t, VComp):
        return f"({unparse(t.first)} ; {unparse(t.second)})"
    return f"({unparse(t.left)} | {unparse(t.right)})"


def adjoint_term(t: DiagramTerm) -> DiagramTerm:
    if isinstance(t, Id):
        return t
    if isinstance(t, Gen):
        base = t.name.rstrip("*")
        return Gen(base if t.name.endswith("*") else base + "*", t.pos)
    if isinstance(t, VComp):
        return VComp(adjoint_term(t.second), adjoint_term(t.first), t.pos)
    return HComp(adjoint_term(t.left), adjoint_term(t.right), t.pos)


_TOKEN = re.compile(r"(?P<ws>[ \t\r]+)|(?P<comment>#[^\n]*)|(?P<nl>\n)|(?P<eq>==)|(?P<name>[A-Za-z_][A-Za-z0-9_']*)|(?P<op>[*;|(),=])")


class _Tok(NamedTuple):
    kind: str  # "name", "op", "nl", "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    out, line, start, pos = [], 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DiagramSyntaxError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            out.append(_Tok("nl", "\n", line, pos - start + 1))
            line, start = line + 1, m.end()
        elif kind in ("name", "op", "eq"):
            out.append(_Tok("op" if kind == "eq" else kind, m.group(), line, pos - start + 1))
        pos = m.end()
    out.append(_Tok("eof", "", line, pos - start + 1))
    return out


class _Parser:
    def __init__(self, tokens: list[_Tok]):
        self.toks = tokens
        self.i = 0
        self.depth = 0

    def peek(self) -> _Tok:
        # newlines inside parentheses are whitespace
        while self.depth and self.toks[self.i].kind == "nl":
            self.i += 1
        return self.toks[self.i]

    def take(self) -> _Tok:
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.take()
        if tok.text != text:
            raise DiagramSyntaxError(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok.line, tok.col)
        return tok

    def term(self) -> DiagramTerm:
        t = self.hcomp()
        while self.peek().text == ";":
            tok = self.take()
            t = VComp(t, self.hcomp(), (tok.line, tok.col))
        return t

    def hcomp(self) -> DiagramTerm:
        t = self.atom()
        while self.peek().text == "|":
            tok = self.take()
            t = HComp(t, self.atom(), (tok.line, tok.col))
        return t

    def atom(self) -> DiagramTerm:
        tok = self.take()
        if tok.text == "(":
            self.depth += 1
            t = self.term()
            self.expect(")")
            self.depth -= 1
            if self.peek().text == "*":
                bad = self.peek()
                raise DiagramSyntaxError("'*' applies to generator names only", bad.line, bad.col)
            return t
        if tok.kind != "name" or tok.text in ("let", "assert", "check", "scalar"):
            raise DiagramSyntaxError(f"expected a term, found {tok.text or 'end of input'!r}", tok.line, tok.col)
        if tok.text == "id" and self.peek().text == "(":
            self.take()
            self.depth += 1
            wires = [self.name()]
            while self.peek().text == ",":
                self.take()
                wires.append(self.name())
            self.expect(")")
            self.depth -= 1
            return Id(tuple(wires), (tok.line, tok.col))
        stars = 0
        while self.peek().text == "*":
            self.take()
            stars += 1
        return Gen(tok.text + "*" * (stars % 2), (tok.line, tok.col))

    def name(self) -> str:
        tok = self.take()
        if tok.kind != "name":
            raise DiagramSyntaxError(f"expected a name, found {tok.text or 'end of input'!r}", tok.line, tok.col)
        return tok.text

    def end_of_statement(self):
        if self.peek().kind == "eof":
            return
        tok = self.take()
        if tok.kind != "nl":
            raise DiagramSyntaxError(f"unexpected {tok.text!r}", tok.line, tok.col)


def parse(text: str) -> DiagramTerm:
    """Parse a single term; newlines count as whitespace."""
    p = _Parser([t for t in _tokenize(text) if t.kind != "nl"])
    t = p.term()
    tok = p.take()
    if tok.kind != "eof":
        raise DiagramSyntaxError(f"unexpected {tok.text!r}", tok.line, tok.col)
    return t


class Let(NamedTuple):
    name: str
    term: DiagramTerm
    line: int


class Assert(NamedTuple):
    lhs: DiagramTerm
    rhs: DiagramTerm
    scalar: bool
    line: int


class Check(NamedTuple):
    term: DiagramTerm
    line: int


Statement = Union[Let, Assert, Check]


def parse_document(text: str) -> list[Statement]:
    p = _Parser(_tokenize(text))
    out = []
    while True:
        tok = p.take()
        if tok.kind == "eof":
            return out
        if tok.kind == "nl":
            continue
        if tok.text == "let":
            name = p.name()
            p.expect("=")
            out.append(Let(name, p.term(), tok.line))
        elif tok.text == "check":
            out.append(Check(p.term(), tok.line))
        elif tok.text == "assert":
            scalar = p.peek().text == "scalar"
            if scalar:
                p.take()
            lhs = p.term()
            p.expect("==")
            if scalar:
                p.expect("scalar")
            out.append(Assert(lhs, p.term(), scalar, tok.line))
        else:
            raise DiagramSyntaxError(f"expected 'let', 'assert' or 'check', found {tok.text!r}", tok.line, tok.col)
        p.end_of_statement()


# environments ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Obj:
    """A wire list between two regions; empty lists sit inside a single region."""

    wires: tuple[str, ...]
    left: str
    right: str

    def __str__(self):
        return f"[{', '.join(self.wires)}]" if self.wires else f"[]_{self.left}"


def line_object() -> Obj:
    return Obj((), TRIVIAL, TRIVIAL)


@dataclass(frozen=True, eq=False)
class Binding:
    source: Obj
    target: Obj
    matrix: np.ndarray
    linearity: str = "bilinear"
    kind: str = "map"


def _complex(values) -> np.ndarray:
    if isinstance(values, dict):
        return np.asarray(values["re"], dtype=float) + 1j * np.asarray(values.get("im", 0.0), dtype=float)
    return np.asarray(values, dtype=complex)


@dataclass(frozen=True, eq=False)
class Environment:
    algebras: MappingProxyType
    bimodules: MappingProxyType  # name -> (Bimodule, left name, right name)
    bindings: MappingProxyType

    def __post_init__(self):
        clash = set(self.algebras) & set(self.bimodules)
        if clash:
            raise AlgebraMismatch(f"names used for both algebras and bimodules: {sorted(clash)}")
        if self.algebras.get(TRIVIAL, Algebra((1,))) != Algebra((1,)):
            raise AlgebraMismatch(f"{TRIVIAL!r} is reserved for the trivial algebra")
        for name, b in self.bindings.items():
            self._validate(name, b)

    def _validate(self, name: str, b: Binding):
        src, tgt = self.realize(b.source), self.realize(b.target)
        if b.matrix.shape != (tgt.dim, src.dim):
            raise DimensionMismatch(f"binding {name!r}: matrix {b.matrix.shape} vs boundary {(tgt.dim, src.dim)}")
        if b.linearity in ("bilinear", "left") and b.source.left != b.target.left:
            raise AlgebraMismatch(f"binding {name!r} is left-linear but changes the left region")
        if b.linearity in ("bilinear", "right") and b.source.right != b.target.right:
            raise AlgebraMismatch(f"binding {name!r} is right-linear but changes the right region")

    def algebra(self, name: str) -> Algebra:
        if name == TRIVIAL:
            return self.algebras.get(TRIVIAL, Algebra((1,)))
        return self.algebras[name]

    def obj(self, wires: tuple[str, ...]) -> Obj:
        """The object named by ``id(...)`` arguments."""
        if len(wires) == 1 and (wires[0] in self.algebras or wires[0] == TRIVIAL):
            return Obj((), wires[0], wires[0])
        for w in wires:
            if w not in self.bimodules:
                raise DiagramTypeError(f"unknown wire {w!r}")
        for a, b in zip(wires, wires[1:]):
            if self.bimodules[a][2] != self.bimodules[b][1]:
                raise DiagramTypeError(f"wires {a!r} and {b!r} meet over {self.bimodules[a][2]!r} and {self.bimodules[b][1]!r}")
        return Obj(tuple(wires), self.bimodules[wires[0]][1], self.bimodules[wires[-1]][2])

    def realize(self, obj: Obj) -> Bimodule:
        if not obj.wires:
            return l2_bimodule(self.algebra(obj.left))
        out = self.bimodules[obj.wires[0]][0]
        for w in obj.wires[1:]:
            out = fuse_object(out, self.bimodules[w][0])
        return out

    def bind(self, name: str, binding: Binding) -> "Environment":
        return Environment(self.algebras, self.bimodules, MappingProxyType({**self.bindings, name: binding}))

    @classmethod
    def from_json(cls, data: dict, seed: int | None = None) -> "Environment":
        rng = np.random.default_rng(data.get("seed", 0) if seed is None else seed)
        algebras = {TRIVIAL: Algebra((1,))}
        for name, sizes in data.get("algebras", {}).items():
            algebras[name] = Algebra(tuple(int(s) for s in sizes))
        bimodules = {}
        for name, spec in data.get("bimodules", {}).items():
            if "conjugate" in spec:
                H, l, r = bimodules[spec["conjugate"]]
                bimodules[name] = (conjugate(H), r, l)
            elif "l2" in spec:
                bimodules[name] = (l2_bimodule(algebras[spec["l2"]]), spec["l2"], spec["l2"])
            else:
                l, r = spec["left"], spec["right"]
                bimodules[name] = (Bimodule(algebras[l], algebras[r], tuple(map(tuple, spec["multiplicities"]))), l, r)
        homs = {}
        for name, spec in data.get("homomorphisms", {}).items():
            homs[name] = (canonical_embedding(algebras[spec["source"]], algebras[spec["target"]], spec["multiplicities"]), spec["source"], spec["target"])
        env = cls(MappingProxyType(algebras), MappingProxyType(bimodules), MappingProxyType({}))
        dualities = {}
        bindings = {}
        for name, spec in data.get("bindings", {}).items():
            bindings[name] = _make_binding(env, name, spec, homs, dualities, rng)
        return cls(env.algebras, env.bimodules, MappingProxyType(bindings))

    @classmethod
    def load(cls, path, seed: int | None = None) -> "Environment":
        return cls.from_json(json.loads(Path(path).read_text()), seed)


def _make_binding(env: Environment, name: str, spec: dict, homs: dict, dualities: dict, rng) -> Binding:
    if "duality" in spec:
        H = spec["of"]
        dual = spec.get("dual") or _find_conjugate(env, H)
        key = (H, dual, bool(spec.get("skew", False)))
        if key not in dualities:
            D = canonical_duality(env.bimodules[H][0])
            if env.bimodules[dual][0] != D.Hbar:
                raise AlgebraMismatch(f"{dual!r} is not the conjugate of {H!r}")
            if key[2]:
                # a generic bilinear map is invertible
                D = skew(D, random_bilinear(D.H, D.H, rng))
            dualities[key] = D
        D = dualities[key]
        which = spec.get("map", name if name in ("R", "S") else "R")
        _, a, b = env.bimodules[H]
        if which == "R":
            return Binding(Obj((), a, a), Obj((H, dual), a, a), D.R.matrix, "bilinear", "duality")
        if which == "S":
            return Binding(Obj((), b, b), Obj((dual, H), b, b), D.S.matrix, "bilinear", "duality")
        raise ValueError(f"binding {name!r}: map must be 'R' or 'S'")
    if "identity" in spec:
        obj = env.obj(tuple(spec["identity"]) if isinstance(spec["identity"], list) else (spec["identity"],))
        return Binding(obj, obj, np.eye(env.realize(obj).dim), "bilinear", "identity")
    if "random_endomorphism" in spec:
        H = spec["random_endomorphism"]
        lin = spec.get("linearity", "bilinear")
        make = {"bilinear": random_bilinear, "left": random_left_linear, "right": random_right_linear}[lin]
        M = env.bimodules[H][0]
        obj = env.obj((H,))
        return Binding(obj, obj, make(M, M, rng).matrix, lin, "endomorphism")
    if "element" in spec:
        A = spec["element"]
        alg = env.algebra(A)
        x = alg.element([_complex(b) for b in spec["blocks"]]) if "blocks" in spec else alg.random_element(rng)
        side = spec.get("multiplier", "left")
        obj = Obj((), A, A)
        if side == "left":
            return Binding(obj, obj, left_operator(x), "right", "element")
        return Binding(obj, obj, right_operator(x), "left", "element")
    if "vector" in spec:
        H = spec["vector"]
        M = env.bimodules[H][0]
        v = _complex(spec["values"]) if "values" in spec else rng.normal(size=M.dim) + 1j * rng.normal(size=M.dim)
        return Binding(line_object(), env.obj((H,)), v.reshape(-1, 1), "plain", "vector")
    if "l2_of" in spec:
        from .functor import l2_of_hom

        f, a, b = homs[spec["l2_of"]]
        return Binding(Obj((), a, a), Obj((), b, b), l2_of_hom(f).matrix, "plain", "l2map")
    raise ValueError(f"binding {name!r}: unknown construction {sorted(spec)}")


def _find_conjugate(env: Environment, H: str) -> str:
    want = conjugate(env.bimodules[H][0])
    for name, (M, _, _) in env.bimodules.items():
        if M == want:
            return name
    raise AlgebraMismatch(f"no bimodule in the environment is the conjugate of {H!r}")


# typing ---------------------------------------------------------------------------------


class Boundary(NamedTuple):
    source: Obj
    target: Obj
    linearity: str
    log: tuple[str, ...] = ()


def _meet(a: str, b: str) -> str:
    left = a in ("bilinear", "left") and b in ("bilinear", "left")
    right = a in ("bilinear", "right") and b in ("bilinear", "right")
    return {(True, True): "bilinear", (True, False): "left", (False, True): "right"}.get((left, right), "plain")


def _concat(x: Obj, y: Obj) -> Obj:
    if not x.wires:
        return y
    if not y.wires:
        return x
    return Obj(x.wires + y.wires, x.left, y.right)


def _where(t: DiagramTerm) -> str:
    return f"{unparse(t)} at {t.pos[0]}:{t.pos[1]}"


def _coercion(x: Obj, y: Obj) -> str | None:
    if not x.wires or not y.wires:
        return f"unitor {x} | {y}"
    if len(y.wires) > 1:
        return f"associator {x} | {y}"
    return None


def typecheck(t: DiagramTerm, env: Environment) -> Boundary:
    """Boundary objects of ``t``, with the unitors and associators it needs."""
    if isinstance(t, Id):
        try:
            obj = env.obj(t.wires)
        except DiagramTypeError as exc:
            raise DiagramTypeError(f"{exc} in {_where(t)}", t) from None
        return Boundary(obj, obj, "bilinear")
    if isinstance(t, Gen):
        base = t.name.rstrip("*")
        if base not in env.bindings:
            raise DiagramTypeError(f"unbound generator {base!r} at {t.pos[0]}:{t.pos[1]}", t)
        b = env.bindings[base]
        if t.name.endswith("*"):
            return Boundary(b.target, b.source, b.linearity)
        return Boundary(b.source, b.target, b.linearity)
    if isinstance(t, VComp):
        a, b = typecheck(t.first, env), typecheck(t.second, env)
        if a.target != b.source:
            raise DiagramTypeError(f"vertical composition {_where(t)}: {a.target} does not match {b.source}", t)
        return Boundary(a.source, b.target, _meet(a.linearity, b.linearity), a.log + b.log)
    a, b = typecheck(t.left, env), typecheck(t.right, env)
    if a.source.right != b.source.left or a.target.right != b.target.left:
        raise DiagramTypeError(
            f"horizontal composition {_where(t)}: middle algebras {a.source.right!r}/{a.target.right!r} "
            f"and {b.source.left!r}/{b.target.left!r} differ",
            t,
        )
    trivial = Algebra((1,))
    if a.linearity not in ("bilinear", "right") and not (
        env.algebra(a.source.right) == trivial and env.algebra(a.target.right) == trivial
    ):
        raise DiagramTypeError(
            f"horizontal composition {_where(t)}: {unparse(t.left)} is not right-linear and meets {b.target.left!r}", t
        )
    if b.linearity not in ("bilinear", "left") and not (
        env.algebra(b.source.left) == trivial and env.algebra(b.target.left) == trivial
    ):
        raise DiagramTypeError(
            f"horizontal composition {_where(t)}: {unparse(t.right)} is not left-linear and meets {a.target.right!r}", t
        )
    left = a.linearity in ("bilinear", "left")
    right = b.linearity in ("bilinear", "right")
    lin = {(True, True): "bilinear", (True, False): "left", (False, True): "right"}.get((left, right), "plain")
    log = tuple(c for c in (_coercion(a.source, b.source), _coercion(a.target, b.target)) if c)
    return Boundary(_concat(a.source, b.source), _concat(a.target, b.target), lin, a.log + b.log + log)


# evaluation ------------------------------------------------------------------------------


def _eval(t: DiagramTerm, env: Environment) -> tuple[Boundary, np.ndarray]:
    if isinstance(t, Id):
        bd = typecheck(t, env)
        return bd, np.eye(env.realize(bd.source).dim)
    if isinstance(t, Gen):
        bd = typecheck(t, env)
        m = env.bindings[t.name.rstrip("*")].matrix
        return bd, dagger(m) if t.name.endswith("*") else m
    if isinstance(t, VComp):
        a, ma = _eval(t.first, env)
        b, mb = _eval(t.second, env)
        if mb.shape[1] != ma.shape[0]:
            raise EvaluationError(f"internal dimension mismatch at {_where(t)}")
        return Boundary(a.source, b.target, _meet(a.linearity, b.linearity), a.log + b.log), mb @ ma
    bd = typecheck(t, env)
    a, ma = _eval(t.left, env)
    b, mb = _eval(t.right, env)
    try:
        f = BimoduleMap(env.realize(a.source), env.realize(a.target), ma, a.linearity, validate=False)
        g = BimoduleMap(env.realize(b.source), env.realize(b.target), mb, b.linearity, validate=False)
        F = fuse_maps(f, g).matrix
        ps = rebracket_permutation(env.realize(bd.source), fuse_object(f.source, g.source))
        pt = rebracket_permutation(fuse_object(f.target, g.target), env.realize(bd.target))
    except L2FusionError as exc:
        raise EvaluationError(f"{exc} at {_where(t)}") from exc
    out = np.empty_like(F)
    out[pt] = F[:, ps]
    return bd, out


def evaluate(t: DiagramTerm, env: Environment) -> np.ndarray:
    """The matrix of ``t`` between the realized boundary spaces."""
    typecheck(t, env)
    return _eval(t, env)[1]


# documents ------------------------------------------------------------------------------


class Outcome(NamedTuple):
    line: int
    text: str
    passed: bool
    residual: float
    detail: str


def _expand(t: DiagramTerm, lets: dict) -> DiagramTerm:
    if isinstance(t, Gen):
        base = t.name.rstrip("*")
        if base in lets:
            return adjoint_term(lets[base]) if t.name.endswith("*") else lets[base]
        return t
    if isinstance(t, VComp):
        return VComp(_expand(t.first, lets), _expand(t.second, lets), t.pos)
    if isinstance(t, HComp):
        return HComp(_expand(t.left, lets), _expand(t.right, lets), t.pos)
    return t


def _scalar(t: DiagramTerm, env: Environment, tol: float) -> complex:
    bd, m = _eval(t, env)
    if bd.source != bd.target or bd.source.wires or not env.algebra(bd.source.left).is_factor:
        raise DiagramTypeError(f"scalar needs an endomorphism of a factor region, {_where(t)} has {bd.source} -> {bd.target}", t)
    c = np.trace(m) / m.shape[0]
    if fro(m - c * np.eye(m.shape[0])) > tol * max(1.0, abs(c)):
        raise EvaluationError(f"{_where(t)} is not a multiple of the identity")
    return complex(c)


def run_document(text: str, env: Environment, tol: float = 1e-9) -> list[Outcome]:
    """Execute every statement; type errors propagate, failed assertions are reported."""
    lines = text.splitlines()
    lets: dict = {}
    out = []
    for st in parse_document(text):
        src = lines[st.line - 1].strip()
        if isinstance(st, Let):
            term = _expand(st.term, lets)
            typecheck(term, env)
            lets[st.name] = term
        elif isinstance(st, Check):
            bd, _ = _eval(_expand(st.term, lets), env)
            out.append(Outcome(st.line, src, True, 0.0, f"{bd.source} -> {bd.target}"))
        elif st.scalar:
            x, y = _scalar(_expand(st.lhs, lets), env, tol), _scalar(_expand(st.rhs, lets), env, tol)
            res = abs(x - y) / max(1.0, abs(x))
            out.append(Outcome(st.line, src, res <= tol, float(res), f"{x:.12g} vs {y:.12g}"))
        else:
            lhs, rhs = _expand(st.lhs, lets), _expand(st.rhs, lets)
            a, ma = _eval(lhs, env)
            b, mb = _eval(rhs, env)
            if (a.source, a.target) != (b.source, b.target):
                raise DiagramTypeError(f"sides of the assertion on line {st.line} have different boundaries", rhs)
            res = fro(ma - mb) / max(1.0, fro(ma))
            out.append(Outcome(st.line, src, res <= tol, float(res), f"{a.source} -> {a.target}"))
    return out


def run_file(path, env: Environment | None = None, seed: int | None = None, tol: float = 1e-9) -> list[Outcome]:
    """Run a ``.vnd`` file; without ``env`` the JSON file of the same stem is used."""
    path = Path(path)
    if env is None:
        env = Environment.load(path.with_suffix(".json"), seed)
    return run_document(path.read_text(encoding="utf-8"), env, tol)


def corpus() -> list[Path]:
    """The bundled identity diagrams."""
    return sorted(DATA.glob("*.vnd"))


def type_error_fixtures() -> list[Path]:
    return sorted((DATA / "errors").glob("*.vnd"))
