"""The L^2 functor on homomorphisms and the induced maps on fusions.

All Hilbert spaces are realized concretely: ``L^2(A)`` is the Hilbert-Schmidt
model of :mod:`l2fusion.l2` (which coincides with the canonical realization
of ``_A L^2A_A``), and every bimodule attached to a homomorphism is put in
canonical form by :func:`l2fusion.bimodule.ingest`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple
from weakref import WeakKeyDictionary

import numpy as np
import scipy.linalg

from .algebra import Algebra, AlgebraElement, Homomorphism, canonical_embedding, compose_hom
from .bimodule import (
    Bimodule,
    BimoduleMap,
    fuse_apply,
    fuse_maps,
    fuse_object,
    identity_map,
    ingest,
    l2_bimodule,
    random_left_linear,
    random_right_linear,
    rebracket,
    rebracket_apply,
)
from .duality import DualityData, canonical_duality
from .errors import AlgebraMismatch, DimensionMismatch, InconsistentExtension, LinearityViolation, NotInjective, NotNormalized
from .index import l2_bimodule_of, unscaled_expectation
from .l2 import L2Vector, left_operator, right_operator
from .numerics import dagger, fro, psd_sqrt, random_matrix

EXTENSION_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class L2Map:
    """A linear map ``L^2(A) -> L^2(B)`` on vectorized Hilbert-Schmidt vectors.

    ``scales[i]`` is the norm ratio on positive vectors supported in block ``i``
    of ``A``; ``defects[i]`` measures how far the map is from that multiple of
    an isometry on the block.
    """

    hom: Homomorphism
    matrix: np.ndarray
    scales: np.ndarray
    defects: np.ndarray

    @property
    def source(self) -> Algebra:
        return self.hom.source

    @property
    def target(self) -> Algebra:
        return self.hom.target

    def __call__(self, xi: L2Vector) -> L2Vector:
        if xi.parent != self.source:
            raise AlgebraMismatch(f"{xi.parent!r} vs {self.source!r}")
        return L2Vector.from_vector(self.target, self.matrix @ xi.vector())

    def __matmul__(self, other: "L2Map") -> "L2Map":
        """``self o other``."""
        if other.target != self.source:
            raise AlgebraMismatch("maps are not composable")
        return _with_report(compose_hom(other.hom, self.hom), self.matrix @ other.matrix)


def _block_columns(A: Algebra) -> list[slice]:
    out, start = [], 0
    for n in A.block_sizes:
        out.append(slice(start, start + n * n))
        start += n * n
    return out


def _with_report(f: Homomorphism, X: np.ndarray) -> L2Map:
    scales, defects = [], []
    for i, cols in enumerate(_block_columns(f.source)):
        g = dagger(X[:, cols]) @ X[:, cols]
        c = float(np.real(np.trace(g))) / g.shape[0]
        scales.append(np.sqrt(max(c, 0.0)))
        defects.append(fro(g - c * np.eye(g.shape[0])))
    return L2Map(f, X, np.array(scales), np.array(defects))


def _positive_family(A: Algebra) -> list[AlgebraElement]:
    """Rank-one projections on ``e_a``, ``e_a + e_b`` and ``e_a + i e_b`` in every block.

    Their span is all of ``A``, and there are exactly ``dim A`` of them.
    """
    out = []
    for i, n in enumerate(A.block_sizes):
        vecs = [np.eye(n)[a] for a in range(n)]
        for a in range(n):
            for b in range(a + 1, n):
                vecs.append((np.eye(n)[a] + np.eye(n)[b]) / np.sqrt(2))
                vecs.append((np.eye(n)[a] + 1j * np.eye(n)[b]) / np.sqrt(2))
        for v in vecs:
            blocks = [np.zeros((k, k), dtype=complex) for k in A.block_sizes]
            blocks[i] = np.outer(v, v.conj())
            out.append(A.element(blocks))
    return out


def _pullback_density(E_matrix: np.ndarray, A: Algebra, B: Algebra, rho: AlgebraElement) -> AlgebraElement:
    """Density of ``phi o E`` on ``B`` for ``phi = Tr(rho .)`` on ``A``."""
    rt = A.element([r.T for r in rho.blocks]).vector()
    sigma_t = B.from_vector(E_matrix.T @ rt)
    return B.element([s.T for s in sigma_t.blocks])


def _sqrt_image(E_matrix: np.ndarray, f: Homomorphism, rho: AlgebraElement) -> np.ndarray:
    sigma = _pullback_density(E_matrix, f.source, f.target, rho)
    return np.concatenate([psd_sqrt((s + dagger(s)) / 2).reshape(-1) for s in sigma.blocks])


def _sqrt_vector(rho: AlgebraElement) -> np.ndarray:
    return np.concatenate([psd_sqrt((r + dagger(r)) / 2).reshape(-1) for r in rho.blocks])


def l2_of_hom(f: Homomorphism, checks: int = 6) -> L2Map:
    """``sqrt(phi) -> sqrt(phi o E)`` with ``E`` the unscaled minimal expectation, extended linearly.

    The extension is solved on a spanning family of positive vectors and
    then verified on ``checks`` further random positive functionals.
    """
    A = f.source
    E = unscaled_expectation(f).matrix
    family = _positive_family(A)
    S = np.stack([_sqrt_vector(p) for p in family], axis=1)
    Y = np.stack([_sqrt_image(E, f, p) for p in family], axis=1)
    X = Y @ np.linalg.inv(S)
    rng = np.random.default_rng(0)
    for k in range(checks):
        blocks = []
        for n in A.block_sizes:
            g = random_matrix(n, max(1, n - k % 2), rng)
            blocks.append(g @ dagger(g))
        rho = A.element(blocks)
        want = _sqrt_image(E, f, rho)
        got = X @ _sqrt_vector(rho)
        if np.linalg.norm(got - want) > EXTENSION_TOL * max(1.0, np.linalg.norm(want)):
            raise InconsistentExtension(f"linear extension misses a positive vector by {np.linalg.norm(got - want):.3e}")
    return _with_report(f, X)


def l2_iso(f: Homomorphism) -> L2Map:
    """The isometric factor in the polar decomposition of ``L^2(f)``."""
    if not f.is_injective():
        raise NotInjective("the isometric part is defined for injective homomorphisms")
    X = l2_of_hom(f).matrix
    u, _ = scipy.linalg.polar(X, side="right")
    return _with_report(f, u)


def center_in_image(f: Homomorphism) -> bool:
    """``Z(B)`` lies in ``f(A)`` exactly when every block of ``A`` lands in a single block of ``B``."""
    return bool(((f.multiplicities > 0).sum(axis=1) <= 1).all())


def _surjections(s: int, t: int):
    """Maps of finite sets ``t -> s`` that hit every point, as ``s x t`` incidence matrices."""
    for images in itertools.product(range(s), repeat=t):
        if len(set(images)) == s:
            lam = np.zeros((s, t), dtype=int)
            lam[list(images), range(t)] = 1
            yield lam


def l2_iso_counterexamples(max_points: int = 3, tol: float = 1e-6) -> list[tuple[Homomorphism, Homomorphism, float]]:
    """Search commutative towers ``C^r -> C^s -> C^t`` where ``l2_iso`` fails to compose.

    Unital injective maps between commutative algebras are dual to surjections
    of points; returns ``(f, g, gap)`` with ``gap = |l2_iso(g f) - l2_iso(g) l2_iso(f)|``.
    """
    hits = []
    for r in range(1, max_points + 1):
        for s in range(r, max_points + 1):
            for t in range(s, max_points + 1):
                A, B, C = (Algebra((1,) * n) for n in (r, s, t))
                for lf in _surjections(r, s):
                    f = canonical_embedding(A, B, lf)
                    for lg in _surjections(s, t):
                        g = canonical_embedding(B, C, lg)
                        gap = fro(l2_iso(compose_hom(f, g)).matrix - l2_iso(g).matrix @ l2_iso(f).matrix)
                        if gap > tol:
                            hits.append((f, g, gap))
    return hits


# the dual of _A L^2B_B -----------------------------------------------------------------


class InclusionDuality(NamedTuple):
    """Canonical models attached to ``iota : A -> B``.

    ``L`` is ``_A L^2B_B`` and ``G`` is ``_B L^2B_A``, with ``W_L``, ``W_G`` the
    unitaries from concrete ``L^2B``.  ``R`` and ``S`` are the duality maps with
    the dual replaced by ``G`` through ``phi``; ``to_concrete`` identifies
    ``L (x)_B G`` with concrete ``L^2B``.
    """

    iota: Homomorphism
    L: Bimodule
    W_L: np.ndarray
    G: Bimodule
    W_G: np.ndarray
    duality: DualityData
    phi: BimoduleMap
    R: BimoduleMap  # L^2A -> L (x)_B G
    S: BimoduleMap  # L^2B -> G (x)_A L
    to_concrete: np.ndarray


def _l2_as_left_module(iota: Homomorphism):
    """``_B L^2B_A`` in canonical form."""
    return ingest(iota.target, iota.source, left_operator, lambda a: right_operator(iota(a)))


def _concrete_identification(L: Bimodule, W_L: np.ndarray, G: Bimodule, W_G: np.ndarray) -> np.ndarray:
    """Unitary ``L (x)_B G -> L^2B`` built from ``L^2B (x)_B G = G``."""
    B = L.right
    LB = l2_bimodule(B)
    lift = fuse_maps(BimoduleMap(LB, L, W_L, "right", validate=False), identity_map(G))
    unitor = rebracket(fuse_object(LB, G), G)
    return dagger(W_G) @ unitor.matrix @ dagger(lift.matrix)


def phi_identification(iota: Homomorphism, D: DualityData | None = None) -> BimoduleMap:
    """``Phi = (S^* (x) 1)(1 (x) L^2(iota))`` from the dual of ``_A L^2B_B`` to ``_B L^2B_A``."""
    return inclusion_duality(iota, D).phi


_CANONICAL: WeakKeyDictionary = WeakKeyDictionary()


def inclusion_duality(iota: Homomorphism, D: DualityData | None = None) -> InclusionDuality:
    if D is None:
        # homomorphisms are immutable and hash by identity
        if iota not in _CANONICAL:
            L, _ = l2_bimodule_of(iota)
            _CANONICAL[iota] = _inclusion_duality(iota, canonical_duality(L))
        return _CANONICAL[iota]
    return _inclusion_duality(iota, D)


def _inclusion_duality(iota: Homomorphism, D: DualityData) -> InclusionDuality:
    L, W_L = l2_bimodule_of(iota)
    if not D.normalized:
        raise NotNormalized("Phi is built from normalized duality data")
    if D.H != L:
        raise AlgebraMismatch("duality data is not for _A L^2B_B")
    G, W_G = _l2_as_left_module(iota)
    A = iota.source
    LA = l2_bimodule(A)
    LG = fuse_object(L, G)
    U = _concrete_identification(L, W_L, G, W_G)
    x = BimoduleMap(LA, LG, dagger(U) @ l2_of_hom(iota).matrix, "bilinear")
    Hb = D.Hbar
    LB = l2_bimodule(iota.target)
    v = rebracket_apply(Hb, fuse_object(Hb, LA), np.eye(Hb.dim))
    v = fuse_apply(identity_map(Hb), x, v)
    v = rebracket_apply(fuse_object(Hb, LG), fuse_object(fuse_object(Hb, L), G), v)
    v = fuse_apply(D.S.adjoint(), identity_map(G), v)
    v = rebracket_apply(fuse_object(LB, G), G, v)
    phi = BimoduleMap(Hb, G, v, "bilinear", validate=False)
    R = BimoduleMap(LA, LG, fuse_apply(identity_map(L), phi, D.R.matrix), "bilinear", validate=False)
    S = BimoduleMap(LB, fuse_object(G, L), fuse_apply(phi, identity_map(L), D.S.matrix), "bilinear", validate=False)
    return InclusionDuality(iota, L, W_L, G, W_G, D, phi, R, S, U)


def phi_report(I: InclusionDuality) -> dict:
    """Unitarity of ``Phi`` and commutativity of the square through ``R``."""
    p = I.phi.matrix
    l2 = l2_of_hom(I.iota).matrix
    return {
        "unitarity": max(fro(dagger(p) @ p - np.eye(p.shape[1])), fro(p @ dagger(p) - np.eye(p.shape[0]))),
        "square": fro(I.to_concrete @ I.R.matrix - l2),
    }


# modules along a homomorphism ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModuleMap:
    """A map ``source -> target`` that is linear along ``alpha``.

    With ``side="right"`` both are right modules, over ``alpha.source`` and
    ``alpha.target``, and ``x source(a) = target(alpha(a)) x``; ``side="left"``
    is the mirror image.
    """

    source: Bimodule
    target: Bimodule
    alpha: Homomorphism
    matrix: np.ndarray
    side: str = "right"
    tol: float = 1e-8

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        if mat.shape != (self.target.dim, self.source.dim):
            raise DimensionMismatch(f"matrix of shape {mat.shape}, expected {(self.target.dim, self.source.dim)}")
        if self.side not in ("left", "right"):
            raise ValueError(f"unknown side {self.side!r}")
        src_alg = self.source.right if self.side == "right" else self.source.left
        tgt_alg = self.target.right if self.side == "right" else self.target.left
        if src_alg != self.alpha.source or tgt_alg != self.alpha.target:
            raise AlgebraMismatch("module algebras do not match the homomorphism")
        act_s = self.source.right_action if self.side == "right" else self.source.left_action
        act_t = self.target.right_action if self.side == "right" else self.target.left_action
        scale = max(1.0, fro(mat))
        for a in self.alpha.source.generators():
            if fro(mat @ act_s(a) - act_t(self.alpha(a)) @ mat) > self.tol * scale:
                raise LinearityViolation(f"map is not {self.side}-linear along the homomorphism")

    def __matmul__(self, other: "ModuleMap") -> "ModuleMap":
        if other.target != self.source or other.side != self.side:
            raise AlgebraMismatch("module maps are not composable")
        return ModuleMap(other.source, self.target, compose_hom(other.alpha, self.alpha), self.matrix @ other.matrix, self.side)


def restriction_right(H: Bimodule, I: InclusionDuality) -> BimoduleMap:
    """Unitary ``H -> H (x)_B G`` turning the ``iota``-restricted right action into a canonical one."""
    B = I.iota.target
    LB = l2_bimodule(B)
    w = BimoduleMap(LB, I.G, I.W_G, "left", validate=False)
    m = fuse_maps(identity_map(H), w) @ rebracket(H, fuse_object(H, LB))
    return BimoduleMap(H, fuse_object(H, I.G), m.matrix, "plain", validate=False)


def restriction_left(K: Bimodule, I: InclusionDuality) -> BimoduleMap:
    """Unitary ``K -> L (x)_B K``, the mirror of :func:`restriction_right`."""
    B = I.iota.target
    LB = l2_bimodule(B)
    w = BimoduleMap(LB, I.L, I.W_L, "right", validate=False)
    m = fuse_maps(w, identity_map(K)) @ rebracket(K, fuse_object(LB, K))
    return BimoduleMap(K, fuse_object(I.L, K), m.matrix, "plain", validate=False)


def random_module_map(source: Bimodule, target: Bimodule, alpha: Homomorphism, side: str, rng: np.random.Generator) -> ModuleMap:
    """A random map linear along ``alpha``, drawn through the restricted canonical model."""
    I = inclusion_duality(alpha)
    if side == "right":
        r = restriction_right(target, I)
        m = random_right_linear(source, r.target, rng)
    else:
        r = restriction_left(target, I)
        m = random_left_linear(source, r.target, rng)
    return ModuleMap(source, target, alpha, dagger(r.matrix) @ m.matrix, side)


def fuse_functor(h: ModuleMap, alpha: Homomorphism, k: ModuleMap) -> BimoduleMap:
    """``h (x)_alpha k : H1 (x)_{A1} K1 -> H2 (x)_{A2} K2``.

    After moving ``h`` and ``k`` into ``H2 (x) G`` and ``L (x) K2`` the map is
    ``1 (x) S^* (x) 1`` on ``H2 (x) (G (x)_{A1} L) (x) K2``.
    """
    if h.side != "right" or k.side != "left":
        raise LinearityViolation("h must be right-linear and k left-linear")
    if h.alpha is not alpha and (h.alpha.source != alpha.source or h.alpha.target != alpha.target):
        raise AlgebraMismatch("h is linear along a different homomorphism")
    if k.alpha.source != alpha.source or k.alpha.target != alpha.target:
        raise AlgebraMismatch("k is linear along a different homomorphism")
    I = inclusion_duality(alpha)
    H1, H2, K1, K2 = h.source, h.target, k.source, k.target
    hr = BimoduleMap(H1, fuse_object(H2, I.G), restriction_right(H2, I).matrix @ h.matrix, "right", validate=False)
    kr = BimoduleMap(K1, fuse_object(I.L, K2), restriction_left(K2, I).matrix @ k.matrix, "left", validate=False)
    GL = fuse_object(I.G, I.L)
    v = fuse_apply(hr, kr, np.eye(fuse_object(H1, K1).dim))
    v = rebracket_apply(fuse_object(hr.target, kr.target), fuse_object(fuse_object(H2, GL), K2), v)
    contract = fuse_maps(identity_map(H2), I.S.adjoint())
    v = fuse_apply(contract, identity_map(K2), v)
    total = rebracket_apply(fuse_object(contract.target, K2), fuse_object(H2, K2), v)
    return BimoduleMap(fuse_object(H1, K1), fuse_object(H2, K2), total, "plain", validate=False)


# B as module maps ------------------------------------------------------------------------


class BToHom:
    """``b -> (b (x) 1) L^2(iota)``, an isomorphism ``B -> hom(L^2A_A, L^2B_A)``."""

    def __init__(self, iota: Homomorphism):
        self.iota = iota
        self._I = inclusion_duality(iota)
        self._l2 = l2_of_hom(iota).matrix

    def forward(self, b: AlgebraElement) -> np.ndarray:
        return left_operator(b) @ self._l2

    def inverse(self, x: np.ndarray) -> AlgebraElement:
        """Bend the output of ``x`` back with ``S^*``: ``L -> L^2A (x)_A L -> G (x)_A L -> L^2B``."""
        I = self._I
        A, B = self.iota.source, self.iota.target
        LA = l2_bimodule(A)
        xg = BimoduleMap(LA, I.G, I.W_G @ x, "right", validate=False)
        v = rebracket_apply(I.L, fuse_object(LA, I.L), I.W_L @ B.unit().vector())
        v = fuse_apply(xg, identity_map(I.L), v)
        return B.from_vector(I.S.matrix.conj().T @ v)

    @cached_property
    def rank(self) -> int:
        """Rank of the forward map, computed on matrix units of ``B``."""
        cols = [self.forward(e).reshape(-1) for e in self.iota.target.matrix_units()]
        return int(np.linalg.matrix_rank(np.stack(cols, axis=1), tol=1e-9))


def b_to_hom(iota: Homomorphism) -> BToHom:
    return BToHom(iota)
