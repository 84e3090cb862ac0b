"""Multi-matrix algebras, their elements, functionals and homomorphisms.

An :class:`Algebra` ``M_{n_1} + ... + M_{n_r}`` is described by its block
sizes. Elements are tuples of square blocks; a :class:`Functional` is given by
block densities against the unnormalized trace, ``phi(a) = sum_i Tr(rho_i a_i)``.
Homomorphisms are stored in canonical form: an inclusion matrix ``Lambda`` and
one unitary per target block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import AlgebraMismatch, DimensionMismatch, NotProjection, NotUnital
from .numerics import (
    DEFAULT_TOL,
    dagger,
    fro,
    hermitian_eig,
    hermitian_null_space,
    is_psd,
    psd_sqrt,
    random_hermitian,
    random_matrix,
    random_psd,
    range_basis,
    support_projection,
)


@dataclass(frozen=True)
class Algebra:
    block_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.block_sizes)
        if not sizes or any(n < 1 for n in sizes):
            raise DimensionMismatch(f"invalid block sizes {self.block_sizes!r}")
        object.__setattr__(self, "block_sizes", sizes)

    def __repr__(self):
        return "Algebra(" + " + ".join(f"M{n}" for n in self.block_sizes) + ")"

    @property
    def num_blocks(self) -> int:
        return len(self.block_sizes)

    @property
    def dim(self) -> int:
        """Complex dimension, which is also the dimension of L^2."""
        return sum(n * n for n in self.block_sizes)

    @property
    def rep_dim(self) -> int:
        """Dimension of the defining representation ``sum_i C^{n_i}``."""
        return sum(self.block_sizes)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for n in self.block_sizes:
            out.append(acc)
            acc += n * n
        return tuple(out)

    @property
    def is_factor(self) -> bool:
        return self.num_blocks == 1

    def element(self, blocks) -> "AlgebraElement":
        return AlgebraElement(self, tuple(np.asarray(b, dtype=complex) for b in blocks))

    def unit(self) -> "AlgebraElement":
        return self.element([np.eye(n) for n in self.block_sizes])

    def zero(self) -> "AlgebraElement":
        return self.element([np.zeros((n, n)) for n in self.block_sizes])

    def scalar(self, c) -> "AlgebraElement":
        return self.element([c * np.eye(n) for n in self.block_sizes])

    def central_projection(self, i: int) -> "AlgebraElement":
        return self.element([np.eye(n) * (k == i) for k, n in enumerate(self.block_sizes)])

    def central(self, values: Sequence[complex]) -> "AlgebraElement":
        return self.element([v * np.eye(n) for v, n in zip(values, self.block_sizes)])

    def matrix_unit(self, i: int, a: int, b: int) -> "AlgebraElement":
        blocks = [np.zeros((n, n), dtype=complex) for n in self.block_sizes]
        blocks[i][a, b] = 1.0
        return self.element(blocks)

    def matrix_units(self) -> list["AlgebraElement"]:
        return [
            self.matrix_unit(i, a, b)
            for i, n in enumerate(self.block_sizes)
            for a in range(n)
            for b in range(n)
        ]

    def generators(self) -> list["AlgebraElement"]:
        """A small set generating the algebra (not just as a *-algebra)."""
        gens = [self.central_projection(i) for i in range(self.num_blocks)]
        for i, n in enumerate(self.block_sizes):
            for a in range(n - 1):
                gens.append(self.matrix_unit(i, a, a + 1))
                gens.append(self.matrix_unit(i, a + 1, a))
        return gens

    def from_vector(self, v) -> "AlgebraElement":
        v = np.asarray(v, dtype=complex)
        if v.shape != (self.dim,):
            raise DimensionMismatch(f"vector of length {v.shape} for {self!r}")
        return self.element(
            [v[o : o + n * n].reshape(n, n) for o, n in zip(self.offsets, self.block_sizes)]
        )

    def random_element(self, rng: np.random.Generator) -> "AlgebraElement":
        return self.element([random_matrix(n, n, rng) for n in self.block_sizes])

    def random_hermitian(self, rng: np.random.Generator) -> "AlgebraElement":
        return self.element([random_hermitian(n, rng) for n in self.block_sizes])

    def random_positive(self, rng: np.random.Generator, rank_deficient: bool = False) -> "AlgebraElement":
        blocks = []
        for n in self.block_sizes:
            rank = int(rng.integers(0, n + 1)) if rank_deficient else n
            blocks.append(random_psd(n, rng, rank=rank) if rank else np.zeros((n, n)))
        return self.element(blocks)

    def tensor(self, other: "Algebra") -> "Algebra":
        return Algebra(tuple(n * c for n in self.block_sizes for c in other.block_sizes))

    def direct_sum(self, other: "Algebra") -> "Algebra":
        return Algebra(self.block_sizes + other.block_sizes)

    def to_json(self) -> dict:
        return {"blocks": list(self.block_sizes)}

    @classmethod
    def from_json(cls, data) -> "Algebra":
        if not isinstance(data, dict) or "blocks" not in data:
            raise DimensionMismatch("an algebra is described as {\"blocks\": [n_1, ...]}")
        return cls(tuple(data["blocks"]))


TRIVIAL = Algebra((1,))


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    parent: Algebra
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.blocks) != self.parent.num_blocks:
            raise DimensionMismatch("block count does not match the algebra")
        for b, n in zip(self.blocks, self.parent.block_sizes):
            if b.shape != (n, n):
                raise DimensionMismatch(f"block of shape {b.shape}, expected {(n, n)}")

    def _check(self, other: "AlgebraElement"):
        if other.parent != self.parent:
            raise AlgebraMismatch(f"{self.parent!r} vs {other.parent!r}")

    def __add__(self, other):
        self._check(other)
        return AlgebraElement(self.parent, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other):
        self._check(other)
        return AlgebraElement(self.parent, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self):
        return AlgebraElement(self.parent, tuple(-a for a in self.blocks))

    def __mul__(self, c):
        if isinstance(c, AlgebraElement):
            return self @ c
        return AlgebraElement(self.parent, tuple(c * a for a in self.blocks))

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._check(other)
        return AlgebraElement(self.parent, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    def adjoint(self) -> "AlgebraElement":
        return AlgebraElement(self.parent, tuple(dagger(a) for a in self.blocks))

    @property
    def H(self) -> "AlgebraElement":
        return self.adjoint()

    def vector(self) -> np.ndarray:
        return np.concatenate([b.reshape(-1) for b in self.blocks])

    def dense(self) -> np.ndarray:
        """Block-diagonal matrix in the defining representation."""
        out = np.zeros((self.parent.rep_dim,) * 2, dtype=complex)
        k = 0
        for b in self.blocks:
            n = b.shape[0]
            out[k : k + n, k : k + n] = b
            k += n
        return out

    def norm(self) -> float:
        return float(np.sqrt(sum(fro(b) ** 2 for b in self.blocks)))

    def close_to(self, other: "AlgebraElement", tol: float = DEFAULT_TOL) -> bool:
        return (self - other).norm() <= tol * max(1.0, self.norm())

    def is_projection(self, tol: float = DEFAULT_TOL) -> bool:
        return all(
            fro(b - dagger(b)) <= tol * max(1.0, fro(b)) and fro(b @ b - b) <= tol * max(1.0, fro(b))
            for b in self.blocks
        )

    def is_positive(self, tol: float = DEFAULT_TOL) -> bool:
        return all(is_psd(b, tol) for b in self.blocks)

    def is_central(self, tol: float = DEFAULT_TOL) -> bool:
        return all(fro(b - b[0, 0] * np.eye(b.shape[0])) <= tol * max(1.0, fro(b)) for b in self.blocks)

    def central_values(self) -> np.ndarray:
        return np.array([np.trace(b) / b.shape[0] for b in self.blocks])

    def traces(self) -> np.ndarray:
        return np.array([np.trace(b) for b in self.blocks])

    def sqrt(self, tol: float = DEFAULT_TOL) -> "AlgebraElement":
        return AlgebraElement(self.parent, tuple(psd_sqrt(b, tol) for b in self.blocks))


@dataclass(frozen=True, eq=False)
class Functional:
    """``phi(a) = sum_i Tr(rho_i a_i)`` with densities against the plain trace."""

    parent: Algebra
    densities: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "densities", tuple(np.asarray(d, dtype=complex) for d in self.densities))
        if len(self.densities) != self.parent.num_blocks:
            raise DimensionMismatch("density count does not match the algebra")
        for d, n in zip(self.densities, self.parent.block_sizes):
            if d.shape != (n, n):
                raise DimensionMismatch(f"density of shape {d.shape}, expected {(n, n)}")

    @classmethod
    def from_element(cls, rho: AlgebraElement) -> "Functional":
        return cls(rho.parent, rho.blocks)

    @classmethod
    def trace(cls, A: Algebra) -> "Functional":
        return cls(A, tuple(np.eye(n) for n in A.block_sizes))

    @classmethod
    def random_positive(cls, A: Algebra, rng: np.random.Generator, rank_deficient: bool = False) -> "Functional":
        return cls.from_element(A.random_positive(rng, rank_deficient))

    def __call__(self, a: AlgebraElement) -> complex:
        if a.parent != self.parent:
            raise AlgebraMismatch(f"{a.parent!r} vs {self.parent!r}")
        return complex(sum(np.trace(r @ x) for r, x in zip(self.densities, a.blocks)))

    def density(self) -> AlgebraElement:
        return AlgebraElement(self.parent, self.densities)

    @property
    def is_positive(self) -> bool:
        return all(is_psd(d) for d in self.densities)

    def l1_norm(self) -> float:
        return float(sum(np.linalg.svd(d, compute_uv=False).sum() for d in self.densities))

    def support(self, tol: float = DEFAULT_TOL) -> AlgebraElement:
        return AlgebraElement(self.parent, tuple(support_projection(d, tol) for d in self.densities))


@dataclass(frozen=True, eq=False)
class Homomorphism:
    """``a -> (+)_j U_j ((+)_i a_i (x) 1_{Lambda_ij}) U_j^*``.

    Inside target block ``j`` the coordinates are ordered ``(i, row of a_i, copy)``.
    """

    source: Algebra
    target: Algebra
    multiplicities: np.ndarray
    block_unitaries: tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self):
        lam = np.asarray(self.multiplicities, dtype=int)
        if lam.shape != (self.source.num_blocks, self.target.num_blocks):
            raise DimensionMismatch(
                f"multiplicity matrix of shape {lam.shape}, expected "
                f"{(self.source.num_blocks, self.target.num_blocks)}"
            )
        if (lam < 0).any():
            raise DimensionMismatch("negative multiplicity")
        n = np.array(self.source.block_sizes)
        k = np.array(self.target.block_sizes)
        if not np.array_equal(n @ lam, k):
            raise NotUnital(f"sum_i Lambda_ij n_i = {list(n @ lam)} but target blocks are {list(k)}")
        object.__setattr__(self, "multiplicities", lam)
        us = self.block_unitaries or tuple(np.eye(kj, dtype=complex) for kj in k)
        us = tuple(np.asarray(u, dtype=complex) for u in us)
        if len(us) != len(k) or any(u.shape != (kj, kj) for u, kj in zip(us, k)):
            raise DimensionMismatch("block unitaries do not match the target blocks")
        object.__setattr__(self, "block_unitaries", us)

    def __repr__(self):
        return f"Homomorphism({self.source!r} -> {self.target!r}, Lambda={self.multiplicities.tolist()})"

    def apply(self, a: AlgebraElement) -> AlgebraElement:
        if a.parent != self.source:
            raise AlgebraMismatch(f"{a.parent!r} vs {self.source!r}")
        out = []
        for j, u in enumerate(self.block_unitaries):
            parts = [
                np.kron(a.blocks[i], np.eye(self.multiplicities[i, j]))
                for i in range(self.source.num_blocks)
                if self.multiplicities[i, j]
            ]
            out.append(u @ _block_diag(parts) @ dagger(u))
        return AlgebraElement(self.target, tuple(out))

    __call__ = apply

    @cached_property
    def matrix(self) -> np.ndarray:
        """The map as a matrix on vectorized elements."""
        cols = [self.apply(e).vector() for e in self.source.matrix_units()]
        return np.stack(cols, axis=1)

    def is_identity_like(self) -> bool:
        return self.source == self.target and np.array_equal(self.multiplicities, np.eye(self.source.num_blocks, dtype=int))

    def homomorphism_residual(self) -> float:
        """Largest violation of multiplicativity, *-preservation and unitality."""
        units = self.source.matrix_units()
        res = (self.apply(self.source.unit()) - self.target.unit()).norm()
        for x in units:
            res = max(res, (self.apply(x.adjoint()) - self.apply(x).adjoint()).norm())
            for y in units:
                res = max(res, (self.apply(x @ y) - self.apply(x) @ self.apply(y)).norm())
        return float(res)

    def is_injective(self) -> bool:
        return bool((self.multiplicities.sum(axis=1) > 0).all())

    def to_json(self, source_name: str = "A", target_name: str = "B") -> dict:
        return {"source": source_name, "target": target_name, "multiplicities": self.multiplicities.tolist()}

    @classmethod
    def from_json(cls, data: dict, algebras: dict) -> "Homomorphism":
        try:
            src, tgt = algebras[data["source"]], algebras[data["target"]]
        except KeyError as exc:
            raise DimensionMismatch(f"unknown algebra {exc.args[0]!r}") from exc
        return canonical_embedding(src, tgt, data["multiplicities"])


def _block_diag(parts: Sequence[np.ndarray]) -> np.ndarray:
    n = sum(p.shape[0] for p in parts)
    out = np.zeros((n, n), dtype=complex)
    k = 0
    for p in parts:
        out[k : k + p.shape[0], k : k + p.shape[0]] = p
        k += p.shape[0]
    return out


def canonical_embedding(source: Algebra, target: Algebra, multiplicities) -> Homomorphism:
    lam = np.asarray(multiplicities, dtype=int)
    n = np.array(source.block_sizes)
    if lam.shape != (source.num_blocks, target.num_blocks) or not np.array_equal(n @ lam, target.block_sizes):
        raise DimensionMismatch(f"Lambda={lam.tolist()} is not a unital inclusion {source!r} -> {target!r}")
    return Homomorphism(source, target, lam)


def identity_hom(A: Algebra) -> Homomorphism:
    return Homomorphism(A, A, np.eye(A.num_blocks, dtype=int))


def _label_offsets(lam: np.ndarray, sizes: Sequence[int], j: int) -> dict:
    """Start offset of each source block inside target block ``j``."""
    out, acc = {}, 0
    for i, n in enumerate(sizes):
        out[i] = acc
        acc += n * lam[i, j]
    return out


def compose_hom(f: Homomorphism, g: Homomorphism) -> Homomorphism:
    """``g o f``; copies inside a composite block are labelled (j, mu, nu)."""
    if f.target != g.source:
        raise AlgebraMismatch(f"cannot compose {f!r} with {g!r}")
    A, B, C = f.source, f.target, g.target
    lf, lg = f.multiplicities, g.multiplicities
    lam = lf @ lg
    unitaries = []
    for l, kl in enumerate(C.block_sizes):
        inner = _block_diag(
            [np.kron(f.block_unitaries[j], np.eye(lg[j, l])) for j in range(B.num_blocks) if lg[j, l]]
        )
        # position of (j, i, a, mu, nu) in g's ordering
        g_off = _label_offsets(lg, B.block_sizes, l)
        perm = []
        for i, n in enumerate(A.block_sizes):
            for a in range(n):
                for j in range(B.num_blocks):
                    f_off = _label_offsets(lf, A.block_sizes, j)
                    for mu in range(lf[i, j]):
                        row_in_j = f_off[i] + a * lf[i, j] + mu
                        for nu in range(lg[j, l]):
                            perm.append(g_off[j] + row_in_j * lg[j, l] + nu)
        p = np.zeros((kl, kl))
        p[perm, np.arange(kl)] = 1.0
        unitaries.append(g.block_unitaries[l] @ inner @ p)
    return Homomorphism(A, C, lam, tuple(unitaries))


def minimal_central_projections(A: Algebra) -> list[AlgebraElement]:
    return [A.central_projection(i) for i in range(A.num_blocks)]


@dataclass(frozen=True, eq=False)
class Corner:
    """The corner ``pAp`` with isometries ``V_i`` placing its blocks inside ``A``."""

    algebra: Algebra | None
    parent: Algebra
    blocks: tuple[int, ...]
    isometries: tuple[np.ndarray, ...]

    def embed(self, x: AlgebraElement) -> AlgebraElement:
        """``x in pAp -> V x V^*`` inside ``A`` (non-unital)."""
        out = [np.zeros((n, n), dtype=complex) for n in self.parent.block_sizes]
        for k, (i, v) in enumerate(zip(self.blocks, self.isometries)):
            out[i] = v @ x.blocks[k] @ dagger(v)
        return AlgebraElement(self.parent, tuple(out))

    def compress(self, a: AlgebraElement) -> AlgebraElement:
        """``a -> V^* a V``, the corner of ``a``."""
        return AlgebraElement(
            self.algebra, tuple(dagger(v) @ a.blocks[i] @ v for i, v in zip(self.blocks, self.isometries))
        )


def corner(A: Algebra, p: AlgebraElement, tol: float = DEFAULT_TOL) -> Corner:
    if p.parent != A:
        raise AlgebraMismatch(f"{p.parent!r} vs {A!r}")
    if not p.is_projection(tol=1e-8):
        raise NotProjection("corner requires a projection")
    kept, isos = [], []
    for i, b in enumerate(p.blocks):
        v = range_basis(b, tol=1e-6)
        if v.shape[1]:
            kept.append(i)
            isos.append(v)
    alg = Algebra(tuple(v.shape[1] for v in isos)) if kept else None
    return Corner(alg, A, tuple(kept), tuple(isos))


def homomorphism_from_images(
    source: Algebra,
    target: Algebra,
    image: Callable[[AlgebraElement], AlgebraElement],
    tol: float = 1e-8,
) -> Homomorphism:
    """Put a concrete unital *-homomorphism into canonical form.

    ``image`` must be evaluable on matrix units of ``source``.
    """
    lam = np.zeros((source.num_blocks, target.num_blocks), dtype=int)
    cols = {j: [] for j in range(target.num_blocks)}
    for i, n in enumerate(source.block_sizes):
        e11 = image(source.matrix_unit(i, 0, 0))
        units = [image(source.matrix_unit(i, a, 0)) for a in range(n)]
        for j in range(target.num_blocks):
            # e11 maps to a projection: its range is the eigenspace above 1/2
            vals, vecs = np.linalg.eigh((e11.blocks[j] + dagger(e11.blocks[j])) / 2)
            w = vecs[:, vals > 0.5]
            lam[i, j] = w.shape[1]
            for a in range(n):
                for mu in range(w.shape[1]):
                    cols[j].append(units[a].blocks[j] @ w[:, mu])
    us = []
    for j, kj in enumerate(target.block_sizes):
        if len(cols[j]) != kj:
            raise NotUnital(f"image does not fill target block {j}")
        us.append(np.stack(cols[j], axis=1))
    hom = Homomorphism(source, target, lam, tuple(us))
    for x in source.matrix_units():
        if (hom.apply(x) - image(x)).norm() > tol * max(1.0, image(x).norm()):
            raise NotUnital("supplied map is not a unital *-homomorphism")
    return hom


@dataclass(frozen=True, eq=False)
class StarAlgebraStructure:
    """A concrete *-algebra ``X`` on ``C^N`` decomposed as ``U ((+)_i M_{n_i} (x) 1_{m_i}) U^*``.

    Coordinates inside block ``i`` are ordered (matrix index, copy).
    """

    algebra: Algebra
    multiplicities: tuple[int, ...]
    unitary: np.ndarray

    def represent(self, x: AlgebraElement) -> np.ndarray:
        parts = [np.kron(b, np.eye(m)) for b, m in zip(x.blocks, self.multiplicities)]
        return self.unitary @ _block_diag(parts) @ dagger(self.unitary)

    def extract(self, op: np.ndarray) -> AlgebraElement:
        y = dagger(self.unitary) @ op @ self.unitary
        blocks, k = [], 0
        for n, m in zip(self.algebra.block_sizes, self.multiplicities):
            sub = y[k : k + n * m, k : k + n * m]
            blocks.append(sub[::m, ::m].copy())
            k += n * m
        return AlgebraElement(self.algebra, tuple(blocks))


def _span_basis(mats: Sequence[np.ndarray], tol: float = 1e-9) -> list[np.ndarray]:
    if not mats:
        return []
    n = mats[0].shape[0]
    flat = np.stack([m.reshape(-1) for m in mats], axis=1)
    q = range_basis(flat, tol=tol)
    return [q[:, k].reshape(n, n) for k in range(q.shape[1])]


def _clusters(values: np.ndarray, gap: float) -> list[np.ndarray]:
    order = np.argsort(values)
    groups, cur = [], [order[0]]
    for a, b in zip(order[:-1], order[1:]):
        if values[b] - values[a] > gap:
            groups.append(np.array(cur))
            cur = []
        cur.append(b)
    groups.append(np.array(cur))
    return groups


def decompose_star_algebra(
    span: Sequence[np.ndarray], rng: np.random.Generator | None = None
) -> StarAlgebraStructure:
    """Recover block structure of a unital *-subalgebra of ``M_N`` from a spanning set."""
    rng = rng or np.random.default_rng(12345)
    basis = _span_basis([np.asarray(m, dtype=complex) for m in span])
    N = basis[0].shape[0]
    d = len(basis)
    # center: coefficient vectors c with [sum c_k x_k, x_l] = 0 for all l
    gram = np.zeros((d, d), dtype=complex)
    for y in basis:
        c = np.stack([(x @ y - y @ x).reshape(-1) for x in basis], axis=1)
        gram += dagger(c) @ c
    coeffs = hermitian_null_space(gram, tol=1e-10) if d > 1 else np.ones((1, 1))
    center = [sum(c * x for c, x in zip(coeffs[:, k], basis)) for k in range(coeffs.shape[1])]
    z = sum(rng.normal() * (c + dagger(c)) / 2 + rng.normal() * (c - dagger(c)) / 2j for c in center)
    w, v = hermitian_eig((z + dagger(z)) / 2, tol=1e-6)
    scale = max(1.0, float(np.abs(w).max()))
    central = [v[:, g] @ dagger(v[:, g]) for g in _clusters(w, 1e-6 * scale)]
    sizes, mults, columns = [], [], []
    for P in central:
        local = _span_basis([P @ x @ P for x in basis])
        h = sum(rng.normal() * (x + dagger(x)) / 2 + rng.normal() * (x - dagger(x)) / 2j for x in local)
        rank = int(round(np.real(np.trace(P))))
        hw, hv = hermitian_eig((h + dagger(h)) / 2, tol=1e-6)
        range_p = np.abs(np.einsum("ij,ji->i", dagger(hv), P @ hv)) > 0.5
        hw, hv = hw[range_p], hv[:, range_p]
        groups = _clusters(hw, 1e-7 * max(1.0, float(np.abs(hw).max())))
        n = len(groups)
        m = rank // n
        if n * m != rank or any(len(g) != m for g in groups):
            raise DimensionMismatch("span is not a *-algebra (uneven isotypic components)")
        E = [hv[:, g] @ dagger(hv[:, g]) for g in groups]
        x = sum(rng.normal() * b + 1j * rng.normal() * b for b in local)
        w1 = hv[:, groups[0]]
        units = [E[0]]
        for k in range(1, n):
            t = E[k] @ x @ E[0]
            c = np.real(np.trace(dagger(t) @ t)) / m
            units.append(t / np.sqrt(c))
        sizes.append(n)
        mults.append(m)
        for k in range(n):
            for mu in range(m):
                columns.append(units[k] @ w1[:, mu])
    U = np.stack(columns, axis=1)
    if U.shape != (N, N):
        raise DimensionMismatch("span is not a unital *-algebra")
    return StarAlgebraStructure(Algebra(tuple(sizes)), tuple(mults), U)
