"""Conditional expectations and indices of finite-dimensional inclusions.

Every conditional expectation onto ``iota(A)`` inside ``B`` has the form
``E(b)_i = sum_j (id (x) omega_ij)(P_ij U_j^* b_j U_j P_ij)`` where ``omega_ij``
is the functional ``m -> Tr(rho_ij m)`` on the relative commutant factor
``M_{Lambda_ij}`` and ``sum_j Tr rho_ij = 1``.  The densities ``rho_ij`` are
the parameters used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize

from .algebra import (
    Algebra,
    AlgebraElement,
    Homomorphism,
    StarAlgebraStructure,
    corner,
    decompose_star_algebra,
    homomorphism_from_images,
)
from .bimodule import BimoduleMap, fuse_apply, identity_map, ingest
from .duality import canonical_duality, statistical_dimension
from .errors import ConfigurationInvalid, NotFaithful, NotUnital
from .l2 import commutant_basis, left_operator, right_operator
from .numerics import dagger, fro, hermitian_eig, hermitian_null_space, pinv_hermitian, random_matrix, random_unitary

PP_STARTS = 64
PP_TOL = 1e-6


def _block_offsets(iota: Homomorphism, j: int) -> dict:
    """Start of the ``(i, row, copy)`` sub-block of source block ``i`` inside target block ``j``."""
    out, acc = {}, 0
    for i, n in enumerate(iota.source.block_sizes):
        out[i] = acc
        acc += n * iota.multiplicities[i, j]
    return out


@dataclass(frozen=True, eq=False)
class CondExp:
    """A linear map ``B -> A`` stored as a matrix on vectorized elements."""

    inclusion: Homomorphism
    matrix: np.ndarray
    weights: dict | None = field(default=None, repr=False)

    @property
    def source(self) -> Algebra:
        return self.inclusion.target

    @property
    def target(self) -> Algebra:
        return self.inclusion.source

    def __call__(self, b: AlgebraElement) -> AlgebraElement:
        return self.target.from_vector(self.matrix @ b.vector())

    @classmethod
    def from_densities(cls, iota: Homomorphism, densities: dict) -> "CondExp":
        """``E`` from ``rho_ij`` (keys ``(i, j)`` with ``Lambda_ij > 0``)."""
        B = iota.target
        lam = iota.multiplicities
        rho = {}
        for (i, j), k in np.ndenumerate(lam):
            if k:
                r = np.asarray(densities[i, j], dtype=complex)
                if r.shape != (k, k):
                    raise ConfigurationInvalid(f"density for {(i, j)} has shape {r.shape}, expected {(k, k)}")
                rho[i, j] = r
        cols = []
        for e in B.matrix_units():
            cols.append(_apply_densities(iota, rho, e).vector())
        return cls(iota, np.stack(cols, axis=1), rho)

    def densities(self) -> dict:
        """Recover ``rho_ij`` from the map itself."""
        if self.weights is not None:
            return self.weights
        iota = self.inclusion
        A, B = iota.source, iota.target
        out = {}
        for j, u in enumerate(iota.block_unitaries):
            offs = _block_offsets(iota, j)
            for i in range(A.num_blocks):
                k = iota.multiplicities[i, j]
                if not k:
                    continue
                r = np.zeros((k, k), dtype=complex)
                for mu in range(k):
                    for nu in range(k):
                        m = np.zeros((B.block_sizes[j],) * 2, dtype=complex)
                        m[offs[i] + mu, offs[i] + nu] = 1.0
                        blocks = [np.zeros((n, n), dtype=complex) for n in B.block_sizes]
                        blocks[j] = u @ m @ dagger(u)
                        r[nu, mu] = self(B.element(blocks)).blocks[i][0, 0]
                out[i, j] = r
        return out

    def unit_residual(self) -> float:
        return (self(self.source.unit()) - self.target.unit()).norm()

    def bimodule_residual(self) -> float:
        """``E(a x a') - a E(x) a'`` on generators of ``A`` and matrix units of ``B``."""
        iota = self.inclusion
        worst = 0.0
        gens = self.target.generators()
        for x in self.source.matrix_units():
            ex = self(x)
            for a in gens:
                worst = max(worst, (self(iota(a) @ x) - a @ ex).norm(), (self(x @ iota(a)) - ex @ a).norm())
        return float(worst)

    def choi_min_eigenvalue(self) -> float:
        """Smallest eigenvalue of the Choi matrices of ``E`` restricted to each block of ``B``."""
        B, A = self.source, self.target
        worst = np.inf
        for j, N in enumerate(B.block_sizes):
            for i, n in enumerate(A.block_sizes):
                C = np.zeros((N * n, N * n), dtype=complex)
                for k in range(N):
                    for l in range(N):
                        C[k * n : (k + 1) * n, l * n : (l + 1) * n] = self(B.matrix_unit(j, k, l)).blocks[i]
                worst = min(worst, float(np.linalg.eigvalsh((C + dagger(C)) / 2).min()))
        return worst

    def is_valid(self, tol: float = 1e-8) -> bool:
        return self.unit_residual() <= tol and self.bimodule_residual() <= tol and self.choi_min_eigenvalue() >= -tol


def _apply_densities(iota: Homomorphism, rho: dict, b: AlgebraElement) -> AlgebraElement:
    A = iota.source
    out = [np.zeros((n, n), dtype=complex) for n in A.block_sizes]
    for j, u in enumerate(iota.block_unitaries):
        y = dagger(u) @ b.blocks[j] @ u
        offs = _block_offsets(iota, j)
        for i, n in enumerate(A.block_sizes):
            k = iota.multiplicities[i, j]
            if not k:
                continue
            s = y[offs[i] : offs[i] + n * k, offs[i] : offs[i] + n * k].reshape(n, k, n, k)
            out[i] += np.einsum("amcn,nm->ac", s, rho[i, j])
    return AlgebraElement(A, tuple(out))


def trace_expectation(iota: Homomorphism) -> CondExp:
    """The expectation with ``rho_ij = 1 / (sum_j Lambda_ij)``; the normalized trace when ``A = C``."""
    lam = iota.multiplicities
    return CondExp.from_densities(
        iota, {(i, j): np.eye(k) / lam[i].sum() for (i, j), k in np.ndenumerate(lam) if k}
    )


def random_expectation(iota: Homomorphism, rng: np.random.Generator, faithful: bool = True) -> CondExp:
    lam = iota.multiplicities
    rho = {}
    for i in range(lam.shape[0]):
        parts = {}
        for j, k in enumerate(lam[i]):
            if k:
                x = random_matrix(k, k, rng)
                if not faithful and k > 1:
                    x[:, 0] = 0
                parts[j] = x @ dagger(x) + (1e-3 * np.eye(k) if faithful else 0)
        total = sum(np.trace(p).real for p in parts.values())
        for j, p in parts.items():
            rho[i, j] = p / total
    return CondExp.from_densities(iota, rho)


# dimension matrices -------------------------------------------------------------


def l2_bimodule_of(iota: Homomorphism):
    """``_A L^2(B)_B`` in canonical form together with its identification unitary."""
    return ingest(iota.source, iota.target, lambda a: left_operator(iota(a)), right_operator)


def dim_matrix(iota: Homomorphism) -> np.ndarray:
    """Statistical dimensions of ``_A L^2(B)_B``, as an integer matrix."""
    H = l2_bimodule_of(iota).bimodule
    d = statistical_dimension(canonical_duality(H))
    r = np.rint(d)
    if np.abs(d - r).max() > 1e-8:
        raise ConfigurationInvalid(f"non-integral statistical dimensions {d}")
    return r.astype(int)


def minimal_index(iota: Homomorphism):
    """Squares of the statistical dimensions; a scalar between factors."""
    d = dim_matrix(iota)
    sq = d.astype(float) ** 2
    if iota.source.is_factor and iota.target.is_factor:
        return float(sq[0, 0])
    return sq


def unscaled_expectation(iota: Homomorphism) -> CondExp:
    """``b -> R^*(b (x) 1)R`` for the canonical duality of ``_A L^2(B)_B``."""
    A, B = iota.source, iota.target
    H, W = l2_bimodule_of(iota)
    D = canonical_duality(H)
    idb = identity_map(D.Hbar)
    r_unit = D.R.matrix @ A.unit().vector()
    Wh = dagger(W)
    cols = []
    start = 0
    for N in B.block_sizes:
        for a in range(N):
            for b in range(N):
                # left multiplication by e_ab moves row b of the block onto row a
                x = W[:, start + a * N : start + (a + 1) * N] @ Wh[start + b * N : start + (b + 1) * N]
                x = BimoduleMap(H, H, x, "right", validate=False)
                cols.append(dagger(D.R.matrix) @ fuse_apply(x, idb, r_unit))
        start += N * N
    return CondExp(iota, np.stack(cols, axis=1))


def minimal_expectation(iota: Homomorphism, unitize: bool = True) -> CondExp:
    """``E_0``: the unscaled expectation divided by the statistical dimension.

    Between factors that is exactly the minimal conditional expectation.  For
    general centers ``E(1)`` is central but not ``1``; with ``unitize`` the map
    is divided blockwise by ``E(1)``, otherwise the unscaled map is returned.
    """
    if not iota.is_injective():
        raise NotUnital("inclusion is not injective")
    E = unscaled_expectation(iota)
    if not unitize:
        return E
    one = E(iota.target.unit())
    scale = np.concatenate([np.full(n * n, 1 / one.blocks[i][0, 0].real) for i, n in enumerate(iota.source.block_sizes)])
    return CondExp(iota, scale[:, None] * E.matrix)


# Pimsner-Popa index -----------------------------------------------------------------


def _block_operator(E: CondExp, j: int) -> np.ndarray:
    """``X -> iota(E(X))`` restricted to block ``j`` of ``B``, on row-major vectors."""
    iota, B = E.inclusion, E.source
    N = B.block_sizes[j]
    start = sum(n * n for n in B.block_sizes[:j])
    cols = []
    for k in range(N * N):
        v = np.zeros(B.dim, dtype=complex)
        v[start + k] = 1.0
        w = iota.matrix @ (E.matrix @ v)
        cols.append(w[start : start + N * N])
    return np.stack(cols, axis=1)


def _pp_objective(K: np.ndarray, N: int, cutoff: float):
    KH = dagger(K)

    def f(x):
        eta = x[:N] + 1j * x[N:]
        M = (K @ np.outer(eta, eta.conj()).reshape(-1)).reshape(N, N)
        Mp = pinv_hermitian((M + dagger(M)) / 2, tol=cutoff)
        w = Mp @ eta
        val = float(np.real(np.vdot(eta, w)))
        G = (KH @ np.outer(w, w.conj()).reshape(-1)).reshape(N, N)
        g = 2 * (w - G @ eta)
        return -val, -np.concatenate([g.real, g.imag])

    return f


class PPIndex(NamedTuple):
    value: float
    sphere: float  # multi-start maximization over unit vectors
    closed_form: float  # spectral formula from the densities
    watatani: np.ndarray  # sum u u^* for a quasi-basis, one value per block of B
    maximizer: np.ndarray
    maximizer_block: int
    agree: bool


def pp_index_closed_form(E: CondExp) -> float:
    """``max_j sum_i`` of the ``min(n_i, Lambda_ij)`` largest eigenvalues of ``rho_ij^{-1}``."""
    iota = E.inclusion
    lam = iota.multiplicities
    rho = E.densities()
    best = 0.0
    for j in range(lam.shape[1]):
        total = 0.0
        for i, n in enumerate(iota.source.block_sizes):
            if not lam[i, j]:
                continue
            w = hermitian_eig((rho[i, j] + dagger(rho[i, j])) / 2).eigenvalues
            if w.min() <= 1e-12 * max(1.0, w.max()):
                raise NotFaithful(f"E kills a positive element in block {(i, j)}; the index is infinite")
            total += np.sort(1 / w)[::-1][: min(n, lam[i, j])].sum()
        best = max(best, total)
    return float(best)


def pp_index_sphere(E: CondExp, starts: int = PP_STARTS, rng: np.random.Generator | None = None):
    """Maximize ``<eta, iota(E(eta eta^*))^+ eta>`` over unit vectors in each block.

    Positive elements are sums of rank-one projections, so the supremum over
    rank-one elements is the optimal constant.
    """
    rng = rng or np.random.default_rng(0)
    best, arg, block = -np.inf, None, -1
    for j, N in enumerate(E.source.block_sizes):
        K = _block_operator(E, j)
        f = _pp_objective(K, N, 1e-10)
        for _ in range(starts):
            x0 = rng.normal(size=2 * N)
            res = minimize(f, x0 / np.linalg.norm(x0), jac=True, method="L-BFGS-B", options={"gtol": 1e-10, "ftol": 1e-15, "maxiter": 500})
            if -res.fun > best:
                best, block = -res.fun, j
                eta = res.x[:N] + 1j * res.x[N:]
                arg = eta / np.linalg.norm(eta)
    return float(best), arg, block


def quasi_basis(E: CondExp) -> list[AlgebraElement]:
    """``{u_k}`` with ``sum_k u_k E(u_k^* x) = x`` on ``B``."""
    iota, B = E.inclusion, E.source
    rho = E.densities()
    out = []
    for j, u in enumerate(iota.block_unitaries):
        N = B.block_sizes[j]
        offs = _block_offsets(iota, j)
        for i2, n2 in enumerate(iota.source.block_sizes):
            k = iota.multiplicities[i2, j]
            if not k:
                continue
            w, v = hermitian_eig((rho[i2, j] + dagger(rho[i2, j])) / 2)
            if w.min() <= 0:
                raise NotFaithful("quasi-bases exist for faithful expectations only")
            # u = |r><c_nu| with c_nu = e_0 (x) v_nu and rho v_nu = w_nu v_nu
            cols = np.zeros((N, k), dtype=complex)
            for nu in range(k):
                cols[offs[i2] : offs[i2] + n2 * k, nu] = np.kron(np.eye(n2)[:, 0], v[:, nu])
            for r in range(N):
                for nu in range(k):
                    m = np.zeros((N, N), dtype=complex)
                    m[r] = cols[:, nu].conj() / np.sqrt(w[nu])
                    blocks = [np.zeros((n, n), dtype=complex) for n in B.block_sizes]
                    blocks[j] = u @ m @ dagger(u)
                    out.append(B.element(blocks))
    return out


def watatani_index(E: CondExp) -> np.ndarray:
    basis = quasi_basis(E)
    total = sum((x @ x.adjoint() for x in basis), E.source.zero())
    return np.array([b[0, 0].real for b in total.blocks])


def pp_index(E: CondExp, starts: int = PP_STARTS, rng: np.random.Generator | None = None) -> PPIndex:
    if E.unit_residual() > 1e-8:
        raise NotUnital("E(1) != 1")
    closed = pp_index_closed_form(E)
    sphere, eta, block = pp_index_sphere(E, starts, rng)
    agree = abs(sphere - closed) <= PP_TOL * max(1.0, closed)
    return PPIndex(max(sphere, closed), sphere, closed, watatani_index(E), eta, block, agree)


# Longo index --------------------------------------------------------------------------


class LongoResult(NamedTuple):
    value: float
    expectation: CondExp
    weights: dict  # (i, j) -> t_ij, with rho_ij = t_ij * 1


def _scalar_densities(iota: Homomorphism, t: dict) -> dict:
    return {(i, j): t[i, j] * np.eye(k) for (i, j), k in np.ndenumerate(iota.multiplicities) if k}


def longo_index(iota: Homomorphism, starts: int = 8, rng: np.random.Generator | None = None) -> LongoResult:
    """``inf_E Ind(E)`` over all conditional expectations onto ``iota(A)``.

    ``Ind(E_rho)`` is a supremum of convex functions of ``rho`` and is invariant
    under ``rho_ij -> u rho_ij u^*`` for unitaries of the relative commutant, so
    averaging over that group shows a minimizer with scalar ``rho_ij = t_ij``
    exists.  The remaining problem in the ``t_ij`` is solved numerically.
    """
    if not iota.is_injective():
        raise NotUnital("inclusion is not injective")
    rng = rng or np.random.default_rng(0)
    lam = iota.multiplicities
    keys = [(i, j) for (i, j), k in np.ndenumerate(lam) if k]

    def value(t_vec):
        t = dict(zip(keys, t_vec))
        return pp_index_closed_form(CondExp.from_densities(iota, _scalar_densities(iota, t)))

    def per_block(z):
        t = dict(zip(keys, np.exp(z[:-1])))
        out = np.zeros(lam.shape[1])
        for (i, j) in keys:
            out[j] += min(iota.source.block_sizes[i], lam[i, j]) / t[i, j]
        return out

    cons = [{"type": "ineq", "fun": lambda z: z[-1] - per_block(z)}]
    for i in range(lam.shape[0]):
        idx = [p for p, (a, _) in enumerate(keys) if a == i]
        cons.append({"type": "eq", "fun": lambda z, idx=idx, i=i: sum(lam[keys[p]] * np.exp(z[p]) for p in idx) - 1})
    best = None
    for s in range(starts):
        t0 = {}
        for i in range(lam.shape[0]):
            w = rng.random(lam.shape[1]) + 0.1 if s else np.ones(lam.shape[1])
            tot = sum(lam[i, j] * w[j] for j in range(lam.shape[1]) if lam[i, j])
            for j in range(lam.shape[1]):
                if lam[i, j]:
                    t0[i, j] = w[j] / tot
        z0 = np.log([t0[k] for k in keys])
        z0 = np.append(z0, per_block(np.append(z0, 0)).max())
        res = minimize(lambda z: z[-1], z0, method="SLSQP", constraints=cons, options={"ftol": 1e-14, "maxiter": 500})
        t = np.exp(res.x[:-1])
        for i in range(lam.shape[0]):
            idx = [p for p, (a, _) in enumerate(keys) if a == i]
            total = sum(lam[keys[p]] * t[p] for p in idx)
            t[idx] /= total
        v = value(t)
        if best is None or v < best[0]:
            best = (v, t)
    t = dict(zip(keys, best[1]))
    E = CondExp.from_densities(iota, _scalar_densities(iota, t))
    return LongoResult(best[0], E, t)


# reports ------------------------------------------------------------------------------


@dataclass
class IndexReport:
    dim_matrix: np.ndarray
    minimal_index: object
    pp_index: float | None
    pp_sphere: float | None
    watatani: list | None
    longo_index: float
    longo_weights: dict

    def to_json(self) -> dict:
        mi = self.minimal_index
        return {
            "dim_matrix": self.dim_matrix.tolist(),
            "minimal_index": mi.tolist() if isinstance(mi, np.ndarray) else mi,
            "pp_index": self.pp_index,
            "pp_index_sphere": self.pp_sphere,
            "watatani": self.watatani,
            "longo_index": self.longo_index,
            "longo_weights": {f"{i},{j}": float(t) for (i, j), t in self.longo_weights.items()},
        }


def index_report(iota: Homomorphism, E: CondExp | None = None, rng: np.random.Generator | None = None) -> IndexReport:
    d = dim_matrix(iota)
    mi = minimal_index(iota)
    if E is None:
        E = minimal_expectation(iota)
    pp = pp_index(E, rng=rng)
    lo = longo_index(iota, rng=rng)
    return IndexReport(d, mi, pp.value, pp.sphere, pp.watatani.tolist(), lo.value, lo.weights)


# corners and the relative commutant ---------------------------------------------------


def relative_commutant_projection(iota: Homomorphism, j: int, parts: dict) -> AlgebraElement:
    """``U_j ((+)_i 1_{n_i} (x) q_i) U_j^*`` in block ``j`` of ``B``."""
    B = iota.target
    blocks = [np.zeros((n, n), dtype=complex) for n in B.block_sizes]
    offs = _block_offsets(iota, j)
    N = B.block_sizes[j]
    m = np.zeros((N, N), dtype=complex)
    for i, q in parts.items():
        n, k = iota.source.block_sizes[i], iota.multiplicities[i, j]
        m[offs[i] : offs[i] + n * k, offs[i] : offs[i] + n * k] = np.kron(np.eye(n), q)
    u = iota.block_unitaries[j]
    blocks[j] = u @ m @ dagger(u)
    return B.element(blocks)


def corner_inclusion(iota: Homomorphism, p: AlgebraElement) -> Homomorphism:
    """``pA -> pBp`` for a projection ``p`` in the relative commutant, with ``A`` a factor."""
    if not iota.source.is_factor:
        raise ConfigurationInvalid("corner inclusions are formed for factors A")
    c = corner(iota.target, p)
    return homomorphism_from_images(iota.source, c.algebra, lambda x: c.compress(iota(x) @ p))


def corner_dimension(iota: Homomorphism, p: AlgebraElement) -> float:
    return float(dim_matrix(corner_inclusion(iota, p))[0, 0])


def central_corner_indices(iota: Homomorphism) -> tuple[float, float]:
    """``(sum_i [p_i B p_i : p_i A], ||[[B:A]]||^2)`` for a factor ``B``."""
    if not iota.target.is_factor:
        raise ConfigurationInvalid("B must be a factor")
    A = iota.source
    total = 0.0
    for i, n in enumerate(A.block_sizes):
        Ai = Algebra((n,))
        p = iota(A.central_projection(i))
        c = corner(iota.target, p)

        def image(x, i=i):
            blocks = [np.zeros((k, k), dtype=complex) for k in A.block_sizes]
            blocks[i] = x.blocks[0]
            return c.compress(iota(A.element(blocks)))

        total += minimal_index(homomorphism_from_images(Ai, c.algebra, image))
    return total, float(np.sum(dim_matrix(iota).astype(float) ** 2))


# concrete configurations ---------------------------------------------------------------


def _basis_of(X: StarAlgebraStructure) -> list[np.ndarray]:
    return [X.represent(e) for e in X.algebra.matrix_units()]


def _span_coefficients(mats: Sequence[np.ndarray]) -> np.ndarray:
    return np.stack([m.reshape(-1) for m in mats], axis=1)


def concrete_inclusion(sub: StarAlgebraStructure, sup: StarAlgebraStructure, tol: float = 1e-8) -> Homomorphism:
    """The inclusion of two concretely represented algebras, in canonical form."""
    for x in _basis_of(sub):
        y = sup.represent(sup.extract(x))
        if fro(x - y) > tol * max(1.0, fro(x)):
            raise ConfigurationInvalid("first algebra is not contained in the second")
    return homomorphism_from_images(sub.algebra, sup.algebra, lambda x: sup.extract(sub.represent(x)))


def relative_commutant(sub: StarAlgebraStructure, sup: StarAlgebraStructure) -> StarAlgebraStructure:
    """``sub' \\cap sup`` as a concrete algebra."""
    basis = _basis_of(sup)
    gens = [sub.represent(g) for g in sub.algebra.generators()]
    d = len(basis)
    gram = np.zeros((d, d), dtype=complex)
    for g in gens:
        c = _span_coefficients([x @ g - g @ x for x in basis])
        gram += dagger(c) @ c
    coeffs = hermitian_null_space(gram, tol=1e-10)
    elems = [sum(c * x for c, x in zip(coeffs[:, k], basis)) for k in range(coeffs.shape[1])]
    return decompose_star_algebra(elems)


def join(*algebras: StarAlgebraStructure) -> StarAlgebraStructure:
    """The *-algebra generated by several unital concrete algebras: the double commutant of their union."""
    gens = [X.represent(g) for X in algebras for g in X.algebra.generators()]
    return decompose_star_algebra(commutant_basis(commutant_basis(gens)))


def commutant(X: StarAlgebraStructure) -> StarAlgebraStructure:
    N = X.unitary.shape[0]
    full = StarAlgebraStructure(Algebra((N,)), (1,), np.eye(N))
    return relative_commutant(X, full)


class Inequality(NamedTuple):
    name: str
    lhs: float
    rhs: float
    holds: bool
    applicable: bool
    asserted: bool  # False for statements whose hypotheses need infinite-dimensional factors


@dataclass
class Configuration:
    """Concrete algebras on a common Hilbert space: factors ``N`` inside ``M`` and a third algebra ``A``.

    ``mode`` is ``"containing"`` for ``M`` inside ``A`` and ``"commuting"`` for ``A``
    inside the commutant of ``M``.
    """

    N: StarAlgebraStructure
    M: StarAlgebraStructure
    A: StarAlgebraStructure
    mode: str = "containing"

    def validate(self):
        if not (self.N.algebra.is_factor and self.M.algebra.is_factor):
            raise ConfigurationInvalid("N and M must be factors")
        dims = {X.unitary.shape[0] for X in (self.N, self.M, self.A)}
        if len(dims) != 1:
            raise ConfigurationInvalid("algebras act on different spaces")
        concrete_inclusion(self.N, self.M)
        if self.mode == "containing":
            concrete_inclusion(self.M, self.A)
        elif self.mode == "commuting":
            concrete_inclusion(self.A, commutant(self.M))
        else:
            raise ConfigurationInvalid(f"unknown mode {self.mode!r}")


def _norm(d: np.ndarray) -> float:
    return float(np.sqrt(np.sum(d.astype(float) ** 2)))


def check_inequalities(config: Configuration, tol: float = 1e-9) -> list[Inequality]:
    config.validate()
    N, M, A = config.N, config.M, config.A
    d_mn = float(dim_matrix(concrete_inclusion(N, M))[0, 0])
    out = []
    if config.mode == "containing":
        big, small = relative_commutant(N, A), relative_commutant(M, A)
        name = "relative commutant"
    else:
        big, small = join(M, A), join(N, A)
        name = "join"
    applicable = big.algebra.is_factor or small.algebra.is_factor
    lhs = _norm(dim_matrix(concrete_inclusion(small, big)))
    out.append(Inequality(name, lhs, d_mn, lhs <= d_mn + tol, applicable, True))
    return out


def finite_center_bound(iota: Homomorphism, rng: np.random.Generator | None = None) -> Inequality:
    """``||[[B:A]]|| <= sqrt(mu)`` with ``mu`` the best Pimsner-Popa constant.

    Reported only: the argument behind it passes through infinite factors, and
    at finite dimension it already fails for ``C`` inside ``M_n``.
    """
    mu = longo_index(iota, rng=rng).value
    lhs = _norm(dim_matrix(iota))
    return Inequality("finite center", lhs, float(np.sqrt(mu)), lhs <= np.sqrt(mu) + 1e-9, True, False)


def norm_experiment(iota: Homomorphism, rng: np.random.Generator | None = None) -> dict:
    """Several matrix norms of ``[[B:A]]`` next to ``sqrt(mu)``; an open-ended probe."""
    d = dim_matrix(iota).astype(float)
    mu = longo_index(iota, rng=rng).value
    return {
        "sqrt_mu": float(np.sqrt(mu)),
        "frobenius": float(np.linalg.norm(d)),
        "operator": float(np.linalg.norm(d, 2)),
        "max_row_l2": float(np.linalg.norm(d, axis=1).max()),
        "max_column_l2": float(np.linalg.norm(d, axis=0).max()),
        "max_entry": float(d.max()),
    }


def _twisted(X: StarAlgebraStructure, V: np.ndarray) -> StarAlgebraStructure:
    return StarAlgebraStructure(X.algebra, X.multiplicities, V @ X.unitary)


def _tensor_structure(left: StarAlgebraStructure, right: StarAlgebraStructure) -> StarAlgebraStructure:
    """``X (x) Y`` on ``C^a (x) C^b`` for concrete ``X`` on ``C^a`` and ``Y`` on ``C^b``."""
    mats = [np.kron(x, y) for x in _basis_of(left) for y in _basis_of(right)]
    return decompose_star_algebra(mats)


def random_configuration(rng: np.random.Generator, mode: str = "containing", max_dim: int = 16, factor: bool = True) -> Configuration:
    """``N = M_c (x) 1 <= M = M_a (x) 1`` on ``C^a (x) C^b`` with ``A`` built from a subalgebra ``C`` of ``M_b``.

    ``A = M_a (x) C`` when containing ``M`` and ``A = 1 (x) C`` when commuting with it.
    Everything is conjugated by a random unitary of the whole space.
    """
    while True:
        a = int(rng.integers(1, 5))
        b = int(rng.integers(1, 5))
        if a * b <= max_dim:
            break
    divisors = [c for c in range(1, a + 1) if a % c == 0]
    c = int(rng.choice(divisors))
    k = a // c
    W = np.kron(random_unitary(a, rng), np.eye(b))
    N = StarAlgebraStructure(Algebra((c,)), (k * b,), np.eye(a * b))
    N = StarAlgebraStructure(N.algebra, N.multiplicities, W @ N.unitary)
    M = StarAlgebraStructure(Algebra((a,)), (b,), np.eye(a * b))
    if factor:
        sizes = [d for d in range(1, b + 1) if b % d == 0]
        n = int(rng.choice(sizes))
        C = StarAlgebraStructure(Algebra((n,)), (b // n,), random_unitary(b, rng))
    else:
        parts, left = [], b
        while left:
            n = int(rng.integers(1, left + 1))
            parts.append(n)
            left -= n
        C = StarAlgebraStructure(Algebra(tuple(parts)), (1,) * len(parts), random_unitary(b, rng))
    Ma = StarAlgebraStructure(Algebra((a,)), (1,), np.eye(a))
    one = StarAlgebraStructure(Algebra((1,)), (a,), np.eye(a))
    A = _tensor_structure(Ma if mode == "containing" else one, C)
    V = random_unitary(a * b, rng)
    return Configuration(_twisted(N, V), _twisted(M, V), _twisted(A, V), mode)


def _center_order(X: StarAlgebraStructure, Y: StarAlgebraStructure) -> list[int]:
    """For each block of ``X`` the block of ``Y`` with the same central support."""
    px = [X.represent(X.algebra.central_projection(i)) for i in range(X.algebra.num_blocks)]
    py = [Y.represent(Y.algebra.central_projection(k)) for k in range(Y.algebra.num_blocks)]
    order = []
    for p in px:
        hits = [k for k, q in enumerate(py) if fro(p - q) <= 1e-8 * max(1.0, fro(p))]
        if len(hits) != 1:
            raise ConfigurationInvalid("algebra and commutant have mismatched centers")
        order.append(hits[0])
    return order


def commutant_dim_matrix(sub: StarAlgebraStructure, sup: StarAlgebraStructure) -> np.ndarray:
    """``[[A':B']]`` for ``A = sub`` inside ``B = sup``, rows labelled by blocks of ``B`` and columns by ``A``."""
    Ac, Bc = commutant(sub), commutant(sup)
    d = dim_matrix(concrete_inclusion(Bc, Ac))
    return d[np.ix_(_center_order(sup, Bc), _center_order(sub, Ac))]
