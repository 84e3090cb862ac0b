"""The standard form ``L^2(A)`` in its Hilbert-Schmidt model.

Vectors are tuples of ``n_i x n_i`` blocks with inner product
``<xi, eta> = sum_i Tr(xi_i^* eta_i)``; ``A`` acts by left and right
multiplication and the modular conjugation is the blockwise adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .algebra import Algebra, AlgebraElement, Corner, Functional, corner
from .errors import AlgebraMismatch, DimensionMismatch, NotPositive
from .numerics import DEFAULT_TOL, dagger, fro, hermitian_eig, hermitian_null_space, is_psd, matrix_power, psd_sqrt, range_basis


@dataclass(frozen=True, eq=False)
class L2Vector:
    parent: Algebra
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(np.asarray(b, dtype=complex) for b in self.blocks))
        if len(self.blocks) != self.parent.num_blocks or any(
            b.shape != (n, n) for b, n in zip(self.blocks, self.parent.block_sizes)
        ):
            raise DimensionMismatch("L2 vector blocks do not match the algebra")

    @classmethod
    def from_vector(cls, A: Algebra, v) -> "L2Vector":
        return cls(A, A.from_vector(v).blocks)

    @classmethod
    def random(cls, A: Algebra, rng: np.random.Generator) -> "L2Vector":
        return cls(A, A.random_element(rng).blocks)

    def vector(self) -> np.ndarray:
        return np.concatenate([b.reshape(-1) for b in self.blocks])

    def _same(self, other):
        if other.parent != self.parent:
            raise AlgebraMismatch(f"{self.parent!r} vs {other.parent!r}")

    def inner(self, other: "L2Vector") -> complex:
        """Antilinear in ``self``."""
        self._same(other)
        return complex(sum(np.vdot(x, y) for x, y in zip(self.blocks, other.blocks)))

    def norm(self) -> float:
        return float(np.sqrt(sum(fro(b) ** 2 for b in self.blocks)))

    def left(self, a: AlgebraElement) -> "L2Vector":
        self._same(a)
        return L2Vector(self.parent, tuple(x @ y for x, y in zip(a.blocks, self.blocks)))

    def right(self, a: AlgebraElement) -> "L2Vector":
        self._same(a)
        return L2Vector(self.parent, tuple(y @ x for x, y in zip(a.blocks, self.blocks)))

    def __add__(self, other):
        self._same(other)
        return L2Vector(self.parent, tuple(x + y for x, y in zip(self.blocks, other.blocks)))

    def __sub__(self, other):
        self._same(other)
        return L2Vector(self.parent, tuple(x - y for x, y in zip(self.blocks, other.blocks)))

    def __mul__(self, c):
        return L2Vector(self.parent, tuple(c * x for x in self.blocks))

    __rmul__ = __mul__

    def in_cone(self, tol: float = 1e-9) -> bool:
        return all(is_psd(b, tol) for b in self.blocks)


def _require_positive(phi: Functional):
    if not phi.is_positive:
        raise NotPositive("functional is not positive")


def sqrt_state(phi: Functional, tol: float = DEFAULT_TOL) -> L2Vector:
    """The positive vector ``sqrt(phi)``; its squared norm is ``phi(1)``."""
    _require_positive(phi)
    return L2Vector(phi.parent, tuple(psd_sqrt(d, tol) if fro(d) else np.zeros_like(d) for d in phi.densities))


def inner_direct(phi: Functional, psi: Functional, tol: float = DEFAULT_TOL) -> float:
    """``sum_i Tr(rho_i^{1/2} sigma_i^{1/2})``."""
    _require_positive(phi)
    _require_positive(psi)
    if phi.parent != psi.parent:
        raise AlgebraMismatch("functionals live on different algebras")
    total = 0.0
    for r, s in zip(phi.densities, psi.densities):
        total += np.real(np.trace(matrix_power(r, 0.5, tol) @ matrix_power(s, 0.5, tol)))
    return float(total)


def _spectrum(d: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    e = hermitian_eig(d, tol)
    keep = e.eigenvalues > tol * max(float(e.eigenvalues.max()), 0.0)
    return e.eigenvalues[keep], e.eigenvectors[:, keep]


def _relative_profile(phi: Functional, psi: Functional, t: complex, tol: float) -> complex:
    """``f(t) = sum_i Tr(rho_i^{1+it} sigma_i^{-it})`` with powers on supports.

    Expanded in eigenbases, ``f(t) = sum_kl |<u_k, v_l>|^2 lam_k^{1+it} mu_l^{-it}``,
    a finite sum of exponentials in ``t`` and so entire.
    """
    total = 0j
    for r, s in zip(phi.densities, psi.densities):
        if not fro(r) or not fro(s):
            continue
        lam, u = _spectrum(r, tol)
        mu, v = _spectrum(s, tol)
        overlap = np.abs(dagger(u) @ v) ** 2
        total += np.sum(overlap * np.exp((1 + 1j * t) * np.log(lam))[:, None] * np.exp(-1j * t * np.log(mu))[None, :])
    return complex(total)


class AnalyticReport(NamedTuple):
    value: float
    samples: dict


def inner_analytic(
    phi: Functional,
    psi: Functional,
    t_samples: Sequence[float] = (),
    tol: float = DEFAULT_TOL,
    report: bool = False,
):
    """Inner product of square roots via ``phi([D phi : D psi]_t)`` continued to ``t = i/2``.

    On real ``t`` the profile is ``phi(rho^{it} sigma^{-it})``; it is entire in the
    strip, so the value at ``i/2`` is read off by the same spectral formula.
    With ``report=True`` the real-axis samples are returned alongside.
    """
    _require_positive(phi)
    _require_positive(psi)
    if phi.parent != psi.parent:
        raise AlgebraMismatch("functionals live on different algebras")
    value = float(np.real(_relative_profile(phi, psi, 0.5j, tol)))
    if not report:
        return value
    samples = {float(t): _relative_profile(phi, psi, complex(t), tol) for t in t_samples}
    return AnalyticReport(value, samples)


def modular_conjugation(xi: L2Vector) -> L2Vector:
    return L2Vector(xi.parent, tuple(dagger(b) for b in xi.blocks))


J = modular_conjugation


def left_operator(a: AlgebraElement) -> np.ndarray:
    """Matrix of ``xi -> a xi`` on vectorized ``L^2``."""
    return _blockdiag([np.kron(b, np.eye(b.shape[0])) for b in a.blocks])


def right_operator(a: AlgebraElement) -> np.ndarray:
    """Matrix of ``xi -> xi a`` on vectorized ``L^2``."""
    return _blockdiag([np.kron(np.eye(b.shape[0]), b.T) for b in a.blocks])


def _blockdiag(parts):
    n = sum(p.shape[0] for p in parts)
    out = np.zeros((n, n), dtype=complex)
    k = 0
    for p in parts:
        out[k : k + p.shape[0], k : k + p.shape[0]] = p
        k += p.shape[0]
    return out


class AxiomResult(NamedTuple):
    passed: bool
    residual: float


class StandardFormReport(NamedTuple):
    commutant: AxiomResult  # J A J = A'
    center: AxiomResult  # J c J = c^* on Z(A)
    cone_fixed: AxiomResult  # J xi = xi on the cone
    cone_stable: AxiomResult  # a J a J (P) in P
    right_action: AxiomResult  # xi a = J a^* J xi

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self)


def _conjugated_operator(A: Algebra, a: AlgebraElement, conj: Callable[[L2Vector], L2Vector]) -> np.ndarray:
    cols = []
    for k in range(A.dim):
        e = np.zeros(A.dim)
        e[k] = 1.0
        v = conj(conj(L2Vector.from_vector(A, e)).left(a))
        cols.append(v.vector())
    return np.stack(cols, axis=1)


def _subspace_projector(mats: Sequence[np.ndarray]) -> np.ndarray:
    q = range_basis(np.stack([m.reshape(-1) for m in mats], axis=1), tol=1e-9)
    return q @ dagger(q)


def commutant_basis(ops: Sequence[np.ndarray], tol: float = 1e-9) -> list[np.ndarray]:
    """Basis of ``{x : x o = o x for all o in ops}``."""
    n = ops[0].shape[0]
    eye = np.eye(n)
    gram = np.zeros((n * n, n * n), dtype=complex)
    for o in ops:
        # vec(x o - o x) in row-major vec convention
        c = np.kron(eye, o.T) - np.kron(o, eye)
        gram += dagger(c) @ c
    basis = hermitian_null_space(gram, tol=tol)
    return [basis[:, k].reshape(n, n) for k in range(basis.shape[1])]


def check_standard_form(
    A: Algebra,
    conjugation: Callable[[L2Vector], L2Vector] = modular_conjugation,
    rng: np.random.Generator | None = None,
    samples: int = 8,
    tol: float = 1e-8,
) -> StandardFormReport:
    rng = rng or np.random.default_rng(0)
    units = A.matrix_units()
    # (1) J A J equals the commutant of the left action
    jaj = [_conjugated_operator(A, a, conjugation) for a in units]
    comm = commutant_basis([left_operator(g) for g in A.generators()])
    r1 = fro(_subspace_projector(jaj) - _subspace_projector(comm))
    # (2) J c J = c^* for central c
    r2 = 0.0
    for i in range(A.num_blocks):
        c = A.central_projection(i) * complex(rng.normal(), rng.normal())
        r2 = max(r2, fro(_conjugated_operator(A, c, conjugation) - left_operator(c.adjoint())))
    r3 = r4 = r5 = 0.0
    for _ in range(samples):
        phi = Functional.random_positive(A, rng, rank_deficient=True)
        xi = sqrt_state(phi)
        # (3) the cone is fixed
        r3 = max(r3, (conjugation(xi) - xi).norm())
        # (4) a J a J maps the cone into itself
        a = A.random_element(rng)
        image = conjugation(conjugation(xi).left(a)).left(a)
        hermitian_defect = (image - modular_conjugation(image)).norm()
        neg = max((max(0.0, -np.linalg.eigvalsh((b + dagger(b)) / 2).min()) for b in image.blocks), default=0.0)
        r4 = max(r4, hermitian_defect, neg)
        # (5) right action is J a^* J
        eta = L2Vector.random(A, rng)
        r5 = max(r5, (eta.right(a) - conjugation(conjugation(eta).left(a.adjoint()))).norm())
    return StandardFormReport(
        AxiomResult(r1 <= tol, r1),
        AxiomResult(r2 <= tol, r2),
        AxiomResult(r3 <= tol, r3),
        AxiomResult(r4 <= tol * 100, r4),
        AxiomResult(r5 <= tol * 10, r5),
    )


@dataclass(frozen=True, eq=False)
class L2Corner:
    """Isometric identification ``L^2(pAp) -> p L^2(A) p``."""

    corner: Corner
    matrix: np.ndarray

    @property
    def algebra(self) -> Algebra:
        return self.corner.algebra

    def apply(self, xi: L2Vector) -> L2Vector:
        return L2Vector.from_vector(self.corner.parent, self.matrix @ xi.vector())

    def range_projector(self) -> np.ndarray:
        """Projector onto ``p L^2(A) p`` computed directly from ``p``."""
        p = self.corner.embed(self.corner.algebra.unit())
        return left_operator(p) @ right_operator(p)

    def unitarity_residual(self) -> float:
        w = self.matrix
        return max(fro(dagger(w) @ w - np.eye(w.shape[1])), fro(w @ dagger(w) - self.range_projector()))


def l2_corner(A: Algebra, p: AlgebraElement) -> L2Corner:
    c = corner(A, p)
    if c.algebra is None:
        raise DimensionMismatch("zero projection has an empty corner")
    cols = []
    for x in c.algebra.matrix_units():
        cols.append(c.embed(x).vector())
    return L2Corner(c, np.stack(cols, axis=1))


def compress_functional(c: Corner, phi: Functional) -> Functional:
    """``phi o E`` on ``A`` for ``phi`` on ``pAp`` and ``E(a) = p a p``."""
    return Functional.from_element(c.embed(phi.density()))


def tensor_vectors(xi: L2Vector, eta: L2Vector) -> L2Vector:
    """``xi (x) eta`` inside ``L^2(A (x) B)``; blocks ordered (i, k)."""
    AB = xi.parent.tensor(eta.parent)
    return L2Vector(AB, tuple(np.kron(x, y) for x in xi.blocks for y in eta.blocks))
