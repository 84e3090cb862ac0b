"""Canonical bimodules, bimodule maps and Connes fusion.

An ``A``-``B`` bimodule with multiplicity matrix ``m`` is realized as
``(+)_{ij} C^{m_ij} (x) Mat(n_i, k_j)``; blocks are ordered row-major in
``(i, j)`` and, inside a block, coordinates are ``(copy, row, column)``.

Seen as a right ``B``-module the space splits as ``(+)_j V_j (x) conj(C^{k_j})``
with ``V_j = (+)_i C^{m_ij} (x) C^{n_i}``; seen as a left ``A``-module it is
``(+)_i C^{n_i} (x) W_i`` with ``W_i = (+)_j C^{m_ij} (x) conj(C^{k_j})``.
Fusion over ``B`` is then ``(+)_j V_j(H) (x) W_j(K)``; inside block ``(i, l)``
of the result the copies are labelled ``(j, mu, nu)``.

Every realized space remembers how it was built (``structure``) so that
associators and unitors can be produced as explicit permutation unitaries by
matching labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .algebra import Algebra, AlgebraElement, StarAlgebraStructure, decompose_star_algebra
from .errors import AlgebraMismatch, DimensionMismatch, LinearityMismatch, LinearityViolation, NotFaithful
from .l2 import commutant_basis
from .numerics import dagger, fro, hermitian_null_space, random_matrix, range_basis

LINEARITIES = ("bilinear", "left", "right", "plain")

UNIT = ("unit",)
LEAF = ("leaf",)


@dataclass(frozen=True)
class Bimodule:
    left: Algebra
    right: Algebra
    multiplicities: tuple[tuple[int, ...], ...]
    structure: tuple = field(default=LEAF)

    def __post_init__(self):
        m = np.asarray(self.multiplicities, dtype=int).reshape(self.left.num_blocks, self.right.num_blocks)
        if (m < 0).any():
            raise DimensionMismatch("negative multiplicity")
        object.__setattr__(self, "multiplicities", tuple(tuple(int(x) for x in row) for row in m))

    def __repr__(self):
        return f"Bimodule({self.left!r}, {self.right!r}, m={[list(r) for r in self.multiplicities]})"

    @property
    def m(self) -> np.ndarray:
        return np.array(self.multiplicities, dtype=int).reshape(self.left.num_blocks, self.right.num_blocks)

    @cached_property
    def block_offsets(self) -> dict:
        out, acc = {}, 0
        m = self.m
        for i, n in enumerate(self.left.block_sizes):
            for j, k in enumerate(self.right.block_sizes):
                out[i, j] = acc
                acc += m[i, j] * n * k
        return out

    @property
    def dim(self) -> int:
        n = np.array(self.left.block_sizes)
        k = np.array(self.right.block_sizes)
        return int(n @ self.m @ k)

    def block_dim(self, i: int, j: int) -> int:
        return self.m[i, j] * self.left.block_sizes[i] * self.right.block_sizes[j]

    def index(self, i: int, j: int, mu: int, a: int, b: int) -> int:
        n, k = self.left.block_sizes[i], self.right.block_sizes[j]
        return self.block_offsets[i, j] + (mu * n + a) * k + b

    def left_action(self, a: AlgebraElement) -> np.ndarray:
        if a.parent != self.left:
            raise AlgebraMismatch(f"{a.parent!r} does not act on the left of {self!r}")
        parts = []
        for i in range(self.left.num_blocks):
            for j, k in enumerate(self.right.block_sizes):
                parts.append(np.kron(np.kron(np.eye(self.m[i, j]), a.blocks[i]), np.eye(k)))
        return _blockdiag(parts)

    def right_action(self, b: AlgebraElement) -> np.ndarray:
        if b.parent != self.right:
            raise AlgebraMismatch(f"{b.parent!r} does not act on the right of {self!r}")
        parts = []
        for i, n in enumerate(self.left.block_sizes):
            for j in range(self.right.num_blocks):
                parts.append(np.kron(np.eye(self.m[i, j] * n), b.blocks[j].T))
        return _blockdiag(parts)

    def leaf(self) -> "Bimodule":
        """Same bimodule forgetting how it was built."""
        return Bimodule(self.left, self.right, self.multiplicities)

    def is_unit(self) -> bool:
        return self.structure == UNIT

    # coordinates for the one-sided factorizations ---------------------------
    @cached_property
    def right_coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[int]]:
        """Per basis vector: ``(j, index in V_j, column b)``; plus ``dim V_j``."""
        m = self.m
        sizes = self.left.block_sizes
        voff = {}
        vdim = []
        for j in range(self.right.num_blocks):
            acc = 0
            for i, n in enumerate(sizes):
                voff[i, j] = acc
                acc += m[i, j] * n
            vdim.append(acc)
        js, vs, bs = [], [], []
        for i, n in enumerate(sizes):
            for j, k in enumerate(self.right.block_sizes):
                for mu in range(m[i, j]):
                    for a in range(n):
                        for b in range(k):
                            js.append(j)
                            vs.append(voff[i, j] + mu * n + a)
                            bs.append(b)
        return np.array(js, dtype=int), np.array(vs, dtype=int), np.array(bs, dtype=int), vdim

    @cached_property
    def left_coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[int]]:
        """Per basis vector: ``(i, row a, index in W_i)``; plus ``dim W_i``."""
        m = self.m
        ks = self.right.block_sizes
        woff = {}
        wdim = []
        for i in range(self.left.num_blocks):
            acc = 0
            for j, k in enumerate(ks):
                woff[i, j] = acc
                acc += m[i, j] * k
            wdim.append(acc)
        is_, as_, ws = [], [], []
        for i, n in enumerate(self.left.block_sizes):
            for j, k in enumerate(ks):
                for mu in range(m[i, j]):
                    for a in range(n):
                        for b in range(k):
                            is_.append(i)
                            as_.append(a)
                            ws.append(woff[i, j] + mu * k + b)
        return np.array(is_, dtype=int), np.array(as_, dtype=int), np.array(ws, dtype=int), wdim

    def to_json(self, left_name: str = "A", right_name: str = "B") -> dict:
        return {"left": left_name, "right": right_name, "multiplicities": [list(r) for r in self.multiplicities]}

    @classmethod
    def from_json(cls, data: dict, algebras: dict) -> "Bimodule":
        try:
            left, right = algebras[data["left"]], algebras[data["right"]]
        except KeyError as exc:
            raise DimensionMismatch(f"unknown algebra {exc.args[0]!r}") from exc
        return cls(left, right, tuple(map(tuple, data["multiplicities"])))


def _blockdiag(parts: Sequence[np.ndarray]) -> np.ndarray:
    n = sum(p.shape[0] for p in parts)
    out = np.zeros((n, n), dtype=complex)
    k = 0
    for p in parts:
        out[k : k + p.shape[0], k : k + p.shape[0]] = p
        k += p.shape[0]
    return out


def l2_bimodule(A: Algebra) -> Bimodule:
    """``L^2(A)`` as an ``A``-``A`` bimodule; same coordinates as the HS model."""
    return Bimodule(A, A, tuple(map(tuple, np.eye(A.num_blocks, dtype=int))), UNIT)


def action_residual(H: Bimodule, K: Bimodule, matrix: np.ndarray, side: str) -> float:
    """How far ``matrix`` is from intertwining the ``side`` actions."""
    res = 0.0
    if side == "left":
        if H.left != K.left:
            return np.inf
        for g in H.left.generators():
            res = max(res, fro(matrix @ H.left_action(g) - K.left_action(g) @ matrix))
    else:
        if H.right != K.right:
            return np.inf
        for g in H.right.generators():
            res = max(res, fro(matrix @ H.right_action(g) - K.right_action(g) @ matrix))
    return res


@dataclass(frozen=True, eq=False)
class BimoduleMap:
    source: Bimodule
    target: Bimodule
    matrix: np.ndarray
    linearity: str = "bilinear"
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        if self.linearity not in LINEARITIES:
            raise ValueError(f"unknown linearity {self.linearity!r}")
        if mat.shape != (self.target.dim, self.source.dim):
            raise DimensionMismatch(f"matrix of shape {mat.shape}, expected {(self.target.dim, self.source.dim)}")
        if self.validate:
            scale = max(1.0, fro(mat))
            if self.linearity in ("bilinear", "left") and action_residual(self.source, self.target, mat, "left") > 1e-8 * scale:
                raise LinearityMismatch("map does not commute with the left action")
            if self.linearity in ("bilinear", "right") and action_residual(self.source, self.target, mat, "right") > 1e-8 * scale:
                raise LinearityMismatch("map does not commute with the right action")

    @property
    def left_linear(self) -> bool:
        return self.linearity in ("bilinear", "left")

    @property
    def right_linear(self) -> bool:
        return self.linearity in ("bilinear", "right")

    def __matmul__(self, other: "BimoduleMap") -> "BimoduleMap":
        """``self o other``."""
        if other.target.dim != self.source.dim or other.target.left != self.source.left or other.target.right != self.source.right:
            raise DimensionMismatch("maps are not composable")
        lin = _meet(self.linearity, other.linearity)
        return BimoduleMap(other.source, self.target, self.matrix @ other.matrix, lin, validate=False)

    def __add__(self, other: "BimoduleMap") -> "BimoduleMap":
        return BimoduleMap(self.source, self.target, self.matrix + other.matrix, _meet(self.linearity, other.linearity), validate=False)

    def __mul__(self, c) -> "BimoduleMap":
        return BimoduleMap(self.source, self.target, c * self.matrix, self.linearity, validate=False)

    __rmul__ = __mul__

    def adjoint(self) -> "BimoduleMap":
        return BimoduleMap(self.target, self.source, dagger(self.matrix), self.linearity, validate=False)

    def blocks(self) -> dict:
        """For a bilinear map: ``(i, j) -> m'_ij x m_ij`` matrix on copies."""
        if self.linearity != "bilinear":
            raise LinearityMismatch("blocks are defined for bilinear maps only")
        out = {}
        H, K = self.source, self.target
        for i in range(H.left.num_blocks):
            for j in range(H.right.num_blocks):
                rows = [K.index(i, j, nu, 0, 0) for nu in range(K.m[i, j])]
                cols = [H.index(i, j, mu, 0, 0) for mu in range(H.m[i, j])]
                out[i, j] = self.matrix[np.ix_(rows, cols)]
        return out

    def right_blocks(self) -> list[np.ndarray]:
        """For a right-linear map ``(+)_j T_j (x) 1``: the list of ``T_j``."""
        H, K = self.source, self.target
        js, vs, bs, vdim = H.right_coords
        jt, vt, bt, vdim_t = K.right_coords
        out = []
        for j in range(H.right.num_blocks):
            t = np.zeros((vdim_t[j], vdim[j]), dtype=complex)
            cols = np.where((js == j) & (bs == 0))[0]
            rows = np.where((jt == j) & (bt == 0))[0]
            t[np.ix_(vt[rows], vs[cols])] = self.matrix[np.ix_(rows, cols)]
            out.append(t)
        return out

    def left_blocks(self) -> list[np.ndarray]:
        """For a left-linear map ``(+)_i 1 (x) S_i``: the list of ``S_i``."""
        H, K = self.source, self.target
        is_, as_, ws, wdim = H.left_coords
        it, at, wt, wdim_t = K.left_coords
        out = []
        for i in range(H.left.num_blocks):
            s = np.zeros((wdim_t[i], wdim[i]), dtype=complex)
            cols = np.where((is_ == i) & (as_ == 0))[0]
            rows = np.where((it == i) & (at == 0))[0]
            s[np.ix_(wt[rows], ws[cols])] = self.matrix[np.ix_(rows, cols)]
            out.append(s)
        return out


def _meet(a: str, b: str) -> str:
    left = a in ("bilinear", "left") and b in ("bilinear", "left")
    right = a in ("bilinear", "right") and b in ("bilinear", "right")
    return {(True, True): "bilinear", (True, False): "left", (False, True): "right"}.get((left, right), "plain")


def identity_map(H: Bimodule) -> BimoduleMap:
    return BimoduleMap(H, H, np.eye(H.dim), "bilinear", validate=False)


def bilinear_from_blocks(H: Bimodule, K: Bimodule, blocks: dict) -> BimoduleMap:
    """Assemble ``(+)_{ij} T_ij (x) 1`` from copy-space matrices."""
    if H.left != K.left or H.right != K.right:
        raise AlgebraMismatch("bilinear maps need equal algebras on both sides")
    out = np.zeros((K.dim, H.dim), dtype=complex)
    for (i, j), t in blocks.items():
        t = np.asarray(t, dtype=complex)
        if t.shape != (K.m[i, j], H.m[i, j]):
            raise DimensionMismatch(f"block {(i, j)} has shape {t.shape}")
        nk = H.left.block_sizes[i] * H.right.block_sizes[j]
        r0, c0 = K.block_offsets[i, j], H.block_offsets[i, j]
        out[r0 : r0 + t.shape[0] * nk, c0 : c0 + t.shape[1] * nk] = np.kron(t, np.eye(nk))
    return BimoduleMap(H, K, out, "bilinear", validate=False)


def right_linear_from_blocks(H: Bimodule, K: Bimodule, blocks: Sequence[np.ndarray]) -> BimoduleMap:
    """Assemble ``(+)_j T_j (x) 1`` on the right factorization."""
    if H.right != K.right:
        raise AlgebraMismatch("right-linear maps need equal right algebras")
    js, vs, bs, _ = H.right_coords
    jt, vt, bt, _ = K.right_coords
    out = np.zeros((K.dim, H.dim), dtype=complex)
    for j, t in enumerate(blocks):
        cols = np.where(js == j)[0]
        rows = np.where(jt == j)[0]
        same_b = bt[rows][:, None] == bs[cols][None, :]
        out[np.ix_(rows, cols)] = np.asarray(t)[np.ix_(vt[rows], vs[cols])] * same_b
    return BimoduleMap(H, K, out, "right", validate=False)


def left_linear_from_blocks(H: Bimodule, K: Bimodule, blocks: Sequence[np.ndarray]) -> BimoduleMap:
    """Assemble ``(+)_i 1 (x) S_i`` on the left factorization."""
    if H.left != K.left:
        raise AlgebraMismatch("left-linear maps need equal left algebras")
    is_, as_, ws, _ = H.left_coords
    it, at, wt, _ = K.left_coords
    out = np.zeros((K.dim, H.dim), dtype=complex)
    for i, s in enumerate(blocks):
        cols = np.where(is_ == i)[0]
        rows = np.where(it == i)[0]
        same_a = at[rows][:, None] == as_[cols][None, :]
        out[np.ix_(rows, cols)] = np.asarray(s)[np.ix_(wt[rows], ws[cols])] * same_a
    return BimoduleMap(H, K, out, "left", validate=False)


def random_bilinear(H: Bimodule, K: Bimodule, rng: np.random.Generator) -> BimoduleMap:
    blocks = {
        (i, j): random_matrix(K.m[i, j], H.m[i, j], rng)
        for i in range(H.left.num_blocks)
        for j in range(H.right.num_blocks)
    }
    return bilinear_from_blocks(H, K, blocks)


def random_right_linear(H: Bimodule, K: Bimodule, rng: np.random.Generator) -> BimoduleMap:
    _, _, _, vh = H.right_coords
    _, _, _, vk = K.right_coords
    return right_linear_from_blocks(H, K, [random_matrix(a, b, rng) for a, b in zip(vk, vh)])


def random_left_linear(H: Bimodule, K: Bimodule, rng: np.random.Generator) -> BimoduleMap:
    _, _, _, wh = H.left_coords
    _, _, _, wk = K.left_coords
    return left_linear_from_blocks(H, K, [random_matrix(a, b, rng) for a, b in zip(wk, wh)])


# intertwiner spaces -------------------------------------------------------------


def hom_space(H: Bimodule, K: Bimodule) -> list[BimoduleMap]:
    """Orthonormal (Hilbert-Schmidt) basis of bilinear maps ``H -> K``."""
    if H.left != K.left or H.right != K.right:
        raise AlgebraMismatch("hom spaces need equal algebras on both sides")
    out = []
    for i, n in enumerate(H.left.block_sizes):
        for j, k in enumerate(H.right.block_sizes):
            for nu in range(K.m[i, j]):
                for mu in range(H.m[i, j]):
                    t = np.zeros((K.m[i, j], H.m[i, j]))
                    t[nu, mu] = 1.0 / np.sqrt(n * k)
                    out.append(bilinear_from_blocks(H, K, {(i, j): t}))
    return out


def solve_hom_space(H: Bimodule, K: Bimodule, tol: float = 1e-9) -> np.ndarray:
    """Bilinear maps found by solving the commutation equations directly.

    Returns an orthonormal basis as an array of shape ``(count, dim K, dim H)``.
    """
    n = K.dim * H.dim
    gram = np.zeros((n, n), dtype=complex)
    ops = [(H.left_action(g), K.left_action(g)) for g in H.left.generators()]
    ops += [(H.right_action(g), K.right_action(g)) for g in H.right.generators()]
    for h, k in ops:
        c = np.kron(np.eye(K.dim), h.T) - np.kron(k, np.eye(H.dim))
        gram += c.conj().T @ c
    basis = hermitian_null_space(gram, tol=tol)
    return np.stack([basis[:, k].reshape(K.dim, H.dim) for k in range(basis.shape[1])]) if basis.shape[1] else np.zeros((0, K.dim, H.dim))


# labels, unitors and associators -------------------------------------------------


@lru_cache(maxsize=None)
def _copy_labels(H: Bimodule) -> dict:
    """``(i, j) -> list of (chain, copies)``; one entry per copy index."""
    m = H.m
    out = {}
    if H.structure == UNIT:
        for i in range(H.left.num_blocks):
            for j in range(H.right.num_blocks):
                out[i, j] = [((i,), ())] if i == j else []
        return out
    if H.structure == LEAF:
        for i in range(H.left.num_blocks):
            for j in range(H.right.num_blocks):
                out[i, j] = [((i, j), (mu,)) for mu in range(m[i, j])]
        return out
    _, X, Y = H.structure
    lx, ly = _copy_labels(X), _copy_labels(Y)
    for i in range(H.left.num_blocks):
        for l in range(H.right.num_blocks):
            labels = []
            for j in range(X.right.num_blocks):
                for cx, mx in lx[i, j]:
                    for cy, my in ly[j, l]:
                        labels.append((cx + cy[1:], mx + my))
            out[i, l] = labels
    return out


def basis_keys(H: Bimodule) -> list:
    labels = _copy_labels(H)
    keys = []
    for i, n in enumerate(H.left.block_sizes):
        for j, k in enumerate(H.right.block_sizes):
            for lab in labels[i, j]:
                for a in range(n):
                    for b in range(k):
                        keys.append((lab, a, b))
    return keys


@lru_cache(maxsize=256)
def rebracket_permutation(X: Bimodule, Y: Bimodule) -> np.ndarray:
    """Index map of the canonical unitary ``X -> Y``: basis vector ``k`` of ``X`` goes to ``perm[k]``."""
    if X.left != Y.left or X.right != Y.right:
        raise AlgebraMismatch("rebracketing needs equal outer algebras")
    kx, ky = basis_keys(X), basis_keys(Y)
    if len(kx) != len(ky):
        raise DimensionMismatch("objects have different dimensions")
    pos = {k: p for p, k in enumerate(ky)}
    if len(pos) != len(ky):
        raise DimensionMismatch("ambiguous labels")
    try:
        return np.array([pos[k] for k in kx], dtype=int)
    except KeyError as exc:
        raise DimensionMismatch(f"objects are not rebracketings of each other: {exc.args[0]!r}") from exc


def rebracket(X: Bimodule, Y: Bimodule) -> BimoduleMap:
    """The canonical unitary ``X -> Y`` between two bracketings of the same fusion.

    Associators and unitors are special cases; unit factors ``L^2(A)`` are
    absorbed.
    """
    perm = rebracket_permutation(X, Y)
    out = np.zeros((Y.dim, X.dim))
    out[perm, np.arange(X.dim)] = 1.0
    return BimoduleMap(X, Y, out, "bilinear", validate=False)


def rebracket_apply(X: Bimodule, Y: Bimodule, vecs: np.ndarray) -> np.ndarray:
    """``rebracket(X, Y).matrix @ vecs`` without the dense permutation matrix."""
    vecs = np.asarray(vecs)
    out = np.zeros_like(vecs, dtype=complex)
    out[rebracket_permutation(X, Y)] = vecs
    return out


# fusion -------------------------------------------------------------------------


@lru_cache(maxsize=None)
def fuse_object(H: Bimodule, K: Bimodule) -> Bimodule:
    if H.right != K.left:
        raise AlgebraMismatch(f"cannot fuse over {H.right!r} and {K.left!r}")
    return Bimodule(H.left, K.right, tuple(map(tuple, H.m @ K.m)), ("fuse", H, K))


@lru_cache(maxsize=None)
def _fused_coords(H: Bimodule, K: Bimodule) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per basis vector of ``H (x)_B K``: ``(j, index in V_j(H), index in W_j(K))``."""
    mh, mk = H.m, K.m
    sizes_a, sizes_b, sizes_c = H.left.block_sizes, H.right.block_sizes, K.right.block_sizes
    voff, woff = {}, {}
    for j in range(len(sizes_b)):
        acc = 0
        for i, n in enumerate(sizes_a):
            voff[i, j] = acc
            acc += mh[i, j] * n
        acc = 0
        for l, c in enumerate(sizes_c):
            woff[j, l] = acc
            acc += mk[j, l] * c
    js, vs, ws = [], [], []
    for i, n in enumerate(sizes_a):
        for l, c in enumerate(sizes_c):
            for j in range(len(sizes_b)):
                for mu in range(mh[i, j]):
                    for nu in range(mk[j, l]):
                        for a in range(n):
                            for cc in range(c):
                                js.append(j)
                                vs.append(voff[i, j] + mu * n + a)
                                ws.append(woff[j, l] + nu * c + cc)
    return np.array(js, dtype=int), np.array(vs, dtype=int), np.array(ws, dtype=int)


def fuse_maps(f: BimoduleMap, g: BimoduleMap, require_bilinear: bool = False) -> BimoduleMap:
    """``f (x)_B g`` for ``f`` right ``B``-linear and ``g`` left ``B``-linear."""
    if require_bilinear and (f.linearity != "bilinear" or g.linearity != "bilinear"):
        raise LinearityMismatch("fuse_maps expects bilinear maps")
    B = f.source.right
    if f.target.right != B or g.source.left != B or g.target.left != B:
        raise AlgebraMismatch("middle algebras of the two maps differ")
    trivial = B.block_sizes == (1,)
    if not trivial and not (f.right_linear and g.left_linear):
        raise LinearityMismatch("fusion over a non-trivial algebra needs right-linear f and left-linear g")
    src = fuse_object(f.source, g.source)
    tgt = fuse_object(f.target, g.target)
    T = f.right_blocks()
    S = g.left_blocks()
    js, vs, ws = _fused_coords(f.source, g.source)
    jt, vt, wt = _fused_coords(f.target, g.target)
    out = np.zeros((tgt.dim, src.dim), dtype=complex)
    for j in range(B.num_blocks):
        cols = np.where(js == j)[0]
        rows = np.where(jt == j)[0]
        if len(cols) and len(rows):
            out[np.ix_(rows, cols)] = T[j][np.ix_(vt[rows], vs[cols])] * S[j][np.ix_(wt[rows], ws[cols])]
    left = f.left_linear
    right = g.right_linear
    lin = {(True, True): "bilinear", (True, False): "left", (False, True): "right"}.get((left, right), "plain")
    return BimoduleMap(src, tgt, out, lin, validate=False)


def fuse_apply(f: BimoduleMap, g: BimoduleMap, vecs: np.ndarray) -> np.ndarray:
    """``(f (x)_B g) @ vecs`` without forming the fused matrix.

    Over block ``j`` of ``B`` the fused space is ``V_j (x) W_j``, on which the
    map is ``v -> T_j v S_j^T``.
    """
    B = f.source.right
    if f.target.right != B or g.source.left != B or g.target.left != B:
        raise AlgebraMismatch("middle algebras of the two maps differ")
    if B.block_sizes != (1,) and not (f.right_linear and g.left_linear):
        raise LinearityMismatch("fusion over a non-trivial algebra needs right-linear f and left-linear g")
    vecs = np.asarray(vecs, dtype=complex)
    single = vecs.ndim == 1
    if single:
        vecs = vecs[:, None]
    T, S = f.right_blocks(), g.left_blocks()
    js, vs, ws = _fused_coords(f.source, g.source)
    jt, vt, wt = _fused_coords(f.target, g.target)
    out = np.zeros((len(jt), vecs.shape[1]), dtype=complex)
    for j in range(B.num_blocks):
        cols = np.where(js == j)[0]
        rows = np.where(jt == j)[0]
        if not (len(cols) and len(rows)):
            continue
        Tj, Sj = T[j], S[j]
        for k in range(vecs.shape[1]):
            grid = np.zeros((Tj.shape[1], Sj.shape[1]), dtype=complex)
            grid[vs[cols], ws[cols]] = vecs[cols, k]
            out[rows, k] = (Tj @ grid @ Sj.T)[vt[rows], wt[rows]]
    return out[:, 0] if single else out


class GramModel(NamedTuple):
    """Completion of ``hom(L^2 B_B, H_B) (x) K`` compared with the canonical fusion.

    ``span_map`` sends the spanning family ``phi_eta (x) e_beta`` (``eta`` and
    ``e_beta`` running over the realized bases of ``H`` and ``K``) into the
    canonical fused space; ``from_gram`` is the induced unitary from the
    orthonormalized completion.
    """

    gram: np.ndarray
    rank: int
    span_map: np.ndarray
    from_gram: np.ndarray
    isometry_residual: float
    unitarity_residual: float
    off_sector_residual: float
    hom_residual: float


def right_hom_from_l2(H: Bimodule, eta: np.ndarray) -> np.ndarray:
    """The right-linear map ``L^2(B) -> H``, ``xi -> eta . xi`` (all of them arise so)."""
    B = H.right
    cols = [H.right_action(x) @ eta for x in B.matrix_units()]
    return np.stack(cols, axis=1)


def gram_model(H: Bimodule, K: Bimodule, tol: float = 1e-9) -> GramModel:
    B = H.right
    if K.left != B:
        raise AlgebraMismatch(f"cannot fuse over {B!r} and {K.left!r}")
    L2B = l2_bimodule(B)
    if H.dim == 0 or K.dim == 0:
        # no spanning vectors: the completion is the zero space, as is the fusion
        empty = np.zeros((0, 0), dtype=complex)
        return GramModel(empty, 0, np.zeros((fuse_object(H, K).dim, 0), dtype=complex), empty, 0.0, 0.0, 0.0, 0.0)
    eye_h = np.eye(H.dim)
    phis = np.stack([right_hom_from_l2(H, eye_h[:, a]) for a in range(H.dim)])  # (dimH, dimH, dimB)
    hom_res = 0.0
    for g in B.generators():
        lhs = np.einsum("pij,jk->pik", phis, L2B.right_action(g))
        rhs = np.einsum("ij,pjk->pik", H.right_action(g), phis)
        hom_res = max(hom_res, float(np.abs(lhs - rhs).max()))
    one = np.concatenate([np.eye(k).reshape(-1) for k in B.block_sizes])
    images = np.einsum("pij,j->pi", phis, one)  # phi_a(1), shape (dimH, dimH)
    # b[a, a'] = phi_a^* phi_a'(1) as a vector in L^2(B)
    bvec = np.einsum("pij,qi->pqj", phis.conj(), images)
    lk = np.stack([K.left_action(x) for x in B.matrix_units()])  # (dimB, dimK, dimK)
    gram = np.einsum("pqk,kxy->pxqy", bvec, lk).reshape(H.dim * K.dim, H.dim * K.dim)
    # canonical images of phi_a (x) e_beta
    fused = fuse_object(H, K)
    unitor_inv = rebracket(K, fuse_object(L2B, K)).matrix
    idk = identity_map(K)
    span_cols = []
    for a in range(H.dim):
        phi = BimoduleMap(L2B, H, phis[a], "right", validate=False)
        span_cols.append(fuse_maps(phi, idk).matrix @ unitor_inv)
    span = np.concatenate(span_cols, axis=1)  # columns ordered (a, beta)
    iso_res = fro(gram - dagger(span) @ span) / max(1.0, fro(gram))
    # sector decomposition: (block of eta, block of e_beta)
    hj = H.right_coords[0]
    hi = H.left_coords[0]
    kl = K.right_coords[0]
    kj = K.left_coords[0]
    sector = {}
    for a in range(H.dim):
        for beta in range(K.dim):
            key = (hi[a], hj[a], kl[beta]) if hj[a] == kj[beta] else None
            sector.setdefault(key, []).append(a * K.dim + beta)
    mask = np.zeros(gram.shape, dtype=bool)
    cols, rank = [], 0
    for key, idx in sector.items():
        idx = np.array(idx)
        mask[np.ix_(idx, idx)] = True
        if key is None:
            continue
        w, v = np.linalg.eigh(gram[np.ix_(idx, idx)])
        top = max(float(w.max()), 0.0)
        keep = w > tol * top if top > 0 else np.zeros(w.shape, dtype=bool)
        rank += int(keep.sum())
        for e, vec in zip(w[keep], v[:, keep].T):
            col = np.zeros(gram.shape[0], dtype=complex)
            col[idx] = vec / np.sqrt(e)
            cols.append(col)
    off = float(np.abs(gram[~mask]).max()) if (~mask).any() else 0.0
    null_sector = sector.get(None)
    if null_sector:
        null_idx = np.array(null_sector)
        off = max(off, float(np.abs(gram[np.ix_(null_idx, null_idx)]).max()))
    coeff = np.stack(cols, axis=1) if cols else np.zeros((gram.shape[0], 0))
    from_gram = span @ coeff
    unit_res = fro(dagger(from_gram) @ from_gram - np.eye(from_gram.shape[1]))
    if from_gram.shape[0] == from_gram.shape[1]:
        unit_res = max(unit_res, fro(from_gram @ dagger(from_gram) - np.eye(fused.dim)))
    else:
        unit_res = np.inf
    return GramModel(gram, rank, span, from_gram, iso_res, unit_res, off, hom_res)


@dataclass(frozen=True, eq=False)
class FusionResult:
    H: Bimodule
    K: Bimodule
    object: Bimodule

    @cached_property
    def gram(self) -> GramModel:
        return gram_model(self.H, self.K)

    @property
    def from_gram(self) -> np.ndarray:
        return self.gram.from_gram


def fuse(H: Bimodule, K: Bimodule) -> FusionResult:
    """Connes fusion ``H (x)_B K``; the Gram comparison is computed on demand."""
    return FusionResult(H, K, fuse_object(H, K))


def expected_fusion_dim(H: Bimodule, K: Bimodule) -> int:
    n = np.array(H.left.block_sizes)
    c = np.array(K.right.block_sizes)
    return int(n @ (H.m @ K.m) @ c)


# conjugates, sums, tensors --------------------------------------------------------


def conjugate(H: Bimodule) -> Bimodule:
    return Bimodule(H.right, H.left, tuple(map(tuple, H.m.T)))


def conjugation_permutation(H: Bimodule) -> np.ndarray:
    """``P`` with ``conj(H)``-coordinates of ``xi-bar`` equal to ``P @ xi.conj()``."""
    Hb = conjugate(H)
    P = np.zeros((H.dim, H.dim))
    for i, n in enumerate(H.left.block_sizes):
        for j, k in enumerate(H.right.block_sizes):
            for mu in range(H.m[i, j]):
                for a in range(n):
                    for b in range(k):
                        P[Hb.index(j, i, mu, b, a), H.index(i, j, mu, a, b)] = 1.0
    return P


def direct_sum(H: Bimodule, K: Bimodule) -> Bimodule:
    if H.left != K.left or H.right != K.right:
        raise AlgebraMismatch("direct sums need equal algebras")
    return Bimodule(H.left, H.right, tuple(map(tuple, H.m + K.m)))


def direct_sum_injections(H: Bimodule, K: Bimodule) -> tuple[BimoduleMap, BimoduleMap]:
    S = direct_sum(H, K)
    ih = {(i, j): np.eye(S.m[i, j], H.m[i, j]) for i in range(H.left.num_blocks) for j in range(H.right.num_blocks)}
    ik = {
        (i, j): np.eye(S.m[i, j], K.m[i, j], k=-H.m[i, j])
        for i in range(H.left.num_blocks)
        for j in range(H.right.num_blocks)
    }
    return bilinear_from_blocks(H, S, ih), bilinear_from_blocks(K, S, ik)


def external_tensor(H: Bimodule, K: Bimodule) -> Bimodule:
    return Bimodule(H.left.tensor(K.left), H.right.tensor(K.right), tuple(map(tuple, np.kron(H.m, K.m))))


def external_tensor_unitary(H: Bimodule, K: Bimodule) -> np.ndarray:
    """Permutation from ``H (x) K`` (Kronecker coordinates) onto ``external_tensor(H, K)``."""
    T = external_tensor(H, K)
    mk = K.m
    nK, kK = K.left.block_sizes, K.right.block_sizes
    U = np.zeros((T.dim, H.dim * K.dim))
    for i, n in enumerate(H.left.block_sizes):
        for j, k in enumerate(H.right.block_sizes):
            for mu in range(H.m[i, j]):
                for a in range(n):
                    for b in range(k):
                        p = H.index(i, j, mu, a, b)
                        for ii, c in enumerate(nK):
                            for jj, d in enumerate(kK):
                                for nu in range(mk[ii, jj]):
                                    for x in range(c):
                                        for y in range(d):
                                            q = K.index(ii, jj, nu, x, y)
                                            row = T.index(
                                                i * len(nK) + ii,
                                                j * len(kK) + jj,
                                                mu * mk[ii, jj] + nu,
                                                a * c + x,
                                                b * d + y,
                                            )
                                            U[row, p * K.dim + q] = 1.0
    return U


# commutants ---------------------------------------------------------------------


class Commutant(NamedTuple):
    algebra: Algebra
    structure: StarAlgebraStructure
    double_commutant_residual: float


def _span_projector(mats: Sequence[np.ndarray]) -> np.ndarray:
    q = range_basis(np.stack([m.reshape(-1) for m in mats], axis=1))
    return q @ dagger(q)


def commutant_on(H: Bimodule, side: str = "left") -> Commutant:
    """Commutant of the ``side`` action on ``H`` with its recovered block structure."""
    alg = H.left if side == "left" else H.right
    act = H.left_action if side == "left" else H.right_action
    for i in range(alg.num_blocks):
        if not fro(act(alg.central_projection(i))):
            raise NotFaithful(f"block {i} of the {side} algebra acts as zero")
    ops = [act(g) for g in alg.generators()]
    basis = commutant_basis(ops)
    structure = decompose_star_algebra(basis)
    double = commutant_basis(basis)
    original = [act(x) for x in alg.matrix_units()]
    res = fro(_span_projector(double) - _span_projector(original))
    return Commutant(structure.algebra, structure, res)


# ingestion ----------------------------------------------------------------------


class Ingested(NamedTuple):
    bimodule: Bimodule
    unitary: np.ndarray  # concrete space -> canonical realization


def ingest(
    A: Algebra,
    B: Algebra,
    left: Callable[[AlgebraElement], np.ndarray],
    right: Callable[[AlgebraElement], np.ndarray],
    tol: float = 1e-8,
) -> Ingested:
    """Put a concrete ``A-B`` bimodule into canonical form.

    ``left(a)`` and ``right(b)`` are the operators ``xi -> a xi`` and
    ``xi -> xi b`` on a common Hilbert space.  The copy space of block
    ``(i, j)`` is the range of ``left(e_00^i) right(f_00^j)``; the canonical
    vector ``(mu, a, b)`` is ``left(e_a0) right(f_0b) w_mu``.
    """
    dim = left(A.unit()).shape[0]
    mult = np.zeros((A.num_blocks, B.num_blocks), dtype=int)
    spaces = {}
    for i in range(A.num_blocks):
        for j in range(B.num_blocks):
            w = range_basis(left(A.matrix_unit(i, 0, 0)) @ right(B.matrix_unit(j, 0, 0)), tol=1e-6)
            mult[i, j] = w.shape[1]
            spaces[i, j] = w
    H = Bimodule(A, B, tuple(map(tuple, mult)))
    if H.dim != dim:
        raise DimensionMismatch(f"actions are not unital: canonical dimension {H.dim} vs {dim}")
    W = np.zeros((H.dim, dim), dtype=complex)
    for i, n in enumerate(A.block_sizes):
        lefts = [left(A.matrix_unit(i, a, 0)) for a in range(n)]
        for j, k in enumerate(B.block_sizes):
            rights = [right(B.matrix_unit(j, 0, b)) for b in range(k)]
            if not mult[i, j]:
                continue
            rows = [[H.index(i, j, mu, a, b) for mu in range(mult[i, j])] for a in range(n) for b in range(k)]
            rw = [rights[b] @ spaces[i, j] for b in range(k)]
            for a in range(n):
                for b in range(k):
                    W[rows[a * k + b]] = (lefts[a] @ rw[b]).T.conj()
    if fro(W @ dagger(W) - np.eye(H.dim)) > tol * max(1, H.dim):
        raise DimensionMismatch("ingested vectors are not orthonormal; actions may not commute")
    for x in A.generators():
        if fro(W @ left(x) - H.left_action(x) @ W) > tol * max(1.0, fro(left(x))):
            raise LinearityViolation("left action does not match its canonical form")
    for y in B.generators():
        if fro(W @ right(y) - H.right_action(y) @ W) > tol * max(1.0, fro(right(y))):
            raise LinearityViolation("right action does not match its canonical form")
    return Ingested(H, W)
