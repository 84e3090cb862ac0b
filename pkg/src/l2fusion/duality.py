"""Duality data for canonical bimodules.

A pair ``R: L^2A -> H (x)_B Hbar`` and ``S: L^2B -> Hbar (x)_A H`` satisfying
the two zig-zag equations.  Normalized pairs give the statistical dimension
``R^*R = S^*S`` (a matrix indexed by central pairs) and a trace on ``End(H)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bimodule import (
    Bimodule,
    BimoduleMap,
    _copy_labels,
    basis_keys,
    bilinear_from_blocks,
    conjugate,
    fuse_apply,
    fuse_maps,
    fuse_object,
    identity_map,
    l2_bimodule,
    rebracket,
)
from .errors import (
    AlgebraMismatch,
    NotNormalized,
    NotPositiveDefinite,
    SingularState,
    ZeroModule,
    ZigzagViolation,
)
from .numerics import dagger, fro, hermitian_eig, matrix_power, psd_sqrt

ZIGZAG_TOL = 1e-8
NORMALIZATION_TOL = 1e-8


def _central_values(f: BimoduleMap) -> np.ndarray:
    """Scalars of a bilinear endomorphism of ``L^2A``, one per block."""
    blocks = f.blocks()
    return np.array([blocks[i, i][0, 0] if blocks[i, i].size else 0.0 for i in range(f.source.left.num_blocks)])


def _compressed_values(V: BimoduleMap, f: BimoduleMap, g: BimoduleMap) -> np.ndarray:
    """``_central_values(V^* (f (x) g) V)`` from the columns of ``V`` at the block units."""
    L2 = V.source
    pos = [L2.index(i, i, 0, 0, 0) for i in range(L2.left.num_blocks)]
    cols = V.matrix[:, pos]
    return np.einsum("ki,ki->i", cols.conj(), fuse_apply(f, g, cols))


def _block_unit(H: Bimodule, i: int, j: int, mu: int, nu: int) -> BimoduleMap:
    """The bilinear endomorphism ``E_{mu nu}`` on the copies of block ``(i, j)``."""
    t = np.zeros((H.m[i, j], H.m[i, j]))
    t[mu, nu] = 1.0
    return bilinear_from_blocks(H, H, {(i, j): t})


def _block_projection(H: Bimodule, i: int, j: int) -> BimoduleMap:
    return bilinear_from_blocks(H, H, {(i, j): np.eye(H.m[i, j])})


@dataclass(frozen=True, eq=False)
class DualityData:
    H: Bimodule
    Hbar: Bimodule
    R: BimoduleMap
    S: BimoduleMap
    normalized: bool = False

    def __post_init__(self):
        A, B = self.H.left, self.H.right
        if self.Hbar.left != B or self.Hbar.right != A:
            raise AlgebraMismatch("Hbar must be a B-A bimodule")
        if self.R.target.dim != fuse_object(self.H, self.Hbar).dim or self.R.source.dim != l2_bimodule(A).dim:
            raise AlgebraMismatch("R must map L^2A into H (x) Hbar")
        if self.S.target.dim != fuse_object(self.Hbar, self.H).dim or self.S.source.dim != l2_bimodule(B).dim:
            raise AlgebraMismatch("S must map L^2B into Hbar (x) H")

    @property
    def A(self):
        return self.H.left

    @property
    def B(self):
        return self.H.right

    # zig-zags --------------------------------------------------------------
    def _zig_h(self) -> BimoduleMap:
        """``(R^* (x) 1)(1 (x) S)`` on ``H``."""
        H, Hb = self.H, self.Hbar
        return (
            rebracket(fuse_object(l2_bimodule(self.A), H), H)
            @ fuse_maps(self.R.adjoint(), identity_map(H))
            @ rebracket(fuse_object(H, fuse_object(Hb, H)), fuse_object(fuse_object(H, Hb), H))
            @ fuse_maps(identity_map(H), self.S)
            @ rebracket(H, fuse_object(H, l2_bimodule(self.B)))
        )

    def _zig_hbar(self) -> BimoduleMap:
        """``(S^* (x) 1)(1 (x) R)`` on ``Hbar``."""
        H, Hb = self.H, self.Hbar
        return (
            rebracket(fuse_object(l2_bimodule(self.B), Hb), Hb)
            @ fuse_maps(self.S.adjoint(), identity_map(Hb))
            @ rebracket(fuse_object(Hb, fuse_object(H, Hb)), fuse_object(fuse_object(Hb, H), Hb))
            @ fuse_maps(identity_map(Hb), self.R)
            @ rebracket(Hb, fuse_object(Hb, l2_bimodule(self.A)))
        )

    def zigzag_residuals(self) -> tuple[float, float]:
        z1 = self._zig_h().matrix - np.eye(self.H.dim)
        z2 = self._zig_hbar().matrix - np.eye(self.Hbar.dim)
        return fro(z1), fro(z2)

    # states on End(H) ------------------------------------------------------
    def left_state(self, x: BimoduleMap) -> np.ndarray:
        """``R^*(x (x) 1)R`` as one scalar per block of ``A``."""
        return _compressed_values(self.R, x, identity_map(self.Hbar))

    def right_state(self, x: BimoduleMap) -> np.ndarray:
        """``S^*(1 (x) x)S`` as one scalar per block of ``B``."""
        return _compressed_values(self.S, identity_map(self.Hbar), x)

    def state_matrices(self, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Density matrices ``a, b`` on the copies of block ``(i, j)``.

        ``R^*(m (x) 1)R = Tr(a m)`` and ``S^*(1 (x) m)S = Tr(b m)`` for ``m``
        supported on that block.
        """
        k = self.H.m[i, j]
        a = np.zeros((k, k), dtype=complex)
        b = np.zeros((k, k), dtype=complex)
        for mu in range(k):
            for nu in range(k):
                e = _block_unit(self.H, i, j, mu, nu)
                a[nu, mu] = self.left_state(e)[i]
                b[nu, mu] = self.right_state(e)[j]
        return a, b

    def normalization_residual(self) -> float:
        worst = 0.0
        m = self.H.m
        for i in range(self.A.num_blocks):
            for j in range(self.B.num_blocks):
                if m[i, j]:
                    a, b = self.state_matrices(i, j)
                    worst = max(worst, fro(a - b))
        return worst

    def check(self, zigzag_tol: float = ZIGZAG_TOL, normalization_tol: float = NORMALIZATION_TOL) -> "DualityReport":
        z1, z2 = self.zigzag_residuals()
        nr = self.normalization_residual()
        return DualityReport(z1, z2, nr, max(z1, z2) <= zigzag_tol, nr <= normalization_tol)


class DualityReport(NamedTuple):
    zigzag_h: float
    zigzag_hbar: float
    normalization: float
    zigzag_ok: bool
    normalized: bool


def dual_data(D: DualityData) -> DualityData:
    """The same pair read as duality data for ``Hbar`` with dual ``H``."""
    return DualityData(D.Hbar, D.H, D.S, D.R, D.normalized)


def _key_positions(X: Bimodule) -> dict:
    return {k: p for p, k in enumerate(basis_keys(X))}


def canonical_duality(H: Bimodule) -> DualityData:
    """Coevaluations summed over an orthonormal basis of each copy space.

    ``R`` sends the block ``i`` matrix unit ``E_ac`` of ``L^2A`` to
    ``sum_{j, mu} (e_mu (x) conj e_mu) (x) E_ac`` in ``H (x) Hbar``.
    """
    Hb = conjugate(H)
    HHb, HbH = fuse_object(H, Hb), fuse_object(Hb, H)
    LA, LB = l2_bimodule(H.left), l2_bimodule(H.right)

    def coevaluation(L, X, first, second):
        """Columns for ``E_ac`` in block ``i`` of ``L``: sum over copies ``mu`` of ``first``."""
        pos = _key_positions(X)
        lf, ls = _copy_labels(first), _copy_labels(second)
        out = np.zeros((X.dim, L.dim))
        for i, n in enumerate(first.left.block_sizes):
            for j in range(first.right.num_blocks):
                for (cx, mx), (cy, my) in zip(lf[i, j], ls[j, i]):
                    label = (cx + cy[1:], mx + my)
                    for a in range(n):
                        for c in range(n):
                            out[pos[label, a, c], L.index(i, i, 0, a, c)] = 1.0
        return out

    R = coevaluation(LA, HHb, H, Hb)
    S = coevaluation(LB, HbH, Hb, H)
    return DualityData(
        H,
        Hb,
        BimoduleMap(LA, HHb, R, "bilinear", validate=False),
        BimoduleMap(LB, HbH, S, "bilinear", validate=False),
        normalized=True,
    )


def solve_normalization_element(a, b, tol: float = 1e-12) -> np.ndarray:
    """Positive ``x`` with ``x a x = x^{-1} b x^{-1}``.

    ``y = x^2`` solves ``y a y = b`` and is the geometric mean of ``a^{-1}``
    and ``b``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    b = np.atleast_2d(np.asarray(b, dtype=complex))
    if a.shape != b.shape:
        raise NotPositiveDefinite("a and b must have the same shape")
    for name, m in (("a", a), ("b", b)):
        w = hermitian_eig(m).eigenvalues
        if w.min() <= tol * max(1.0, abs(w).max()):
            raise NotPositiveDefinite(f"{name} is not positive definite (min eigenvalue {w.min():.3g})")
    s = psd_sqrt(a)
    s_inv = matrix_power(a, -0.5)
    y = s_inv @ psd_sqrt(s @ b @ s) @ s_inv
    return psd_sqrt((y + dagger(y)) / 2)


def normalize(H: Bimodule, Hbar: Bimodule, R: BimoduleMap, S: BimoduleMap, tol: float = ZIGZAG_TOL) -> tuple[DualityData, BimoduleMap]:
    """Rescale a zig-zag pair blockwise so that it becomes normalized.

    Returns the normalized data and the positive element ``x`` of ``End(H)``
    with ``R = (x (x) 1) R~`` and ``S = (1 (x) x^{-1}) S~``.
    """
    D = DualityData(H, Hbar, R, S)
    z1, z2 = D.zigzag_residuals()
    scale = max(1.0, fro(R.matrix) * fro(S.matrix))
    if max(z1, z2) > tol * scale:
        raise ZigzagViolation(f"zig-zag residuals {z1:.3g}, {z2:.3g}")
    xs, xinv = {}, {}
    m = H.m
    for i in range(H.left.num_blocks):
        for j in range(H.right.num_blocks):
            if not m[i, j]:
                continue
            a, b = D.state_matrices(i, j)
            try:
                x = solve_normalization_element(a, b)
            except NotPositiveDefinite as exc:
                raise SingularState(f"block {(i, j)}: {exc}") from exc
            xs[i, j] = x
            xinv[i, j] = np.linalg.inv(x)
    x = bilinear_from_blocks(H, H, xs)
    xi = bilinear_from_blocks(H, H, xinv)
    R2 = fuse_maps(x, identity_map(Hbar)) @ R
    S2 = fuse_maps(identity_map(Hbar), xi) @ S
    return DualityData(H, Hbar, R2, S2, normalized=True), x


def _require_normalized(D: DualityData):
    if not D.normalized:
        raise NotNormalized("operation needs normalized duality data")


def statistical_dimension(D: DualityData, tol: float = NORMALIZATION_TOL) -> np.ndarray:
    """``dim`` as a matrix indexed by (block of A, block of B)."""
    _require_normalized(D)
    A, B = D.A, D.B
    out = np.zeros((A.num_blocks, B.num_blocks))
    for i in range(A.num_blocks):
        for j in range(B.num_blocks):
            if not D.H.m[i, j]:
                continue
            p = _block_projection(D.H, i, j)
            left, right = D.left_state(p)[i], D.right_state(p)[j]
            if abs(left - right) > tol * max(1.0, abs(left)):
                raise NotNormalized(f"left and right dimensions differ on block {(i, j)}: {left} vs {right}")
            out[i, j] = float(np.real(left))
    return out


def canonical_state(D: DualityData, x: BimoduleMap) -> np.ndarray:
    """``phi(p_i x q_j)`` for all central pairs, with ``phi(x) = R^*(x (x) 1)R``."""
    A, B = D.A, D.B
    out = np.zeros((A.num_blocks, B.num_blocks), dtype=complex)
    for i in range(A.num_blocks):
        for j in range(B.num_blocks):
            if D.H.m[i, j]:
                out[i, j] = D.left_state(_block_projection(D.H, i, j) @ x)[i]
    return out


def bar_involution(D: DualityData, x: BimoduleMap, side: str = "left") -> BimoduleMap:
    """``xbar`` on ``Hbar`` by bending ``x`` with ``S^*`` and ``R`` (``side="left"``)
    or with ``R^*`` and ``S`` (``side="right"``)."""
    _require_normalized(D)
    H, Hb = D.H, D.Hbar
    LA, LB = l2_bimodule(D.A), l2_bimodule(D.B)
    if side == "left":
        out = (
            rebracket(fuse_object(LB, Hb), Hb)
            @ fuse_maps(D.S.adjoint(), identity_map(Hb))
            @ rebracket(fuse_object(Hb, fuse_object(H, Hb)), fuse_object(fuse_object(Hb, H), Hb))
            @ fuse_maps(identity_map(Hb), fuse_maps(x, identity_map(Hb)))
            @ fuse_maps(identity_map(Hb), D.R)
            @ rebracket(Hb, fuse_object(Hb, LA))
        )
    elif side == "right":
        out = (
            rebracket(fuse_object(Hb, LA), Hb)
            @ fuse_maps(identity_map(Hb), D.R.adjoint())
            @ rebracket(fuse_object(fuse_object(Hb, H), Hb), fuse_object(Hb, fuse_object(H, Hb)))
            @ fuse_maps(fuse_maps(identity_map(Hb), x), identity_map(Hb))
            @ fuse_maps(D.S, identity_map(Hb))
            @ rebracket(Hb, fuse_object(LB, Hb))
        )
    else:
        raise ValueError(f"side must be 'left' or 'right', not {side!r}")
    return BimoduleMap(Hb, Hb, out.matrix, "bilinear", validate=False)


def compare_duals(D1: DualityData, D2: DualityData) -> BimoduleMap:
    """The unitary ``v = (S_1^* (x) 1)(1 (x) R_2): Hbar_1 -> Hbar_2``."""
    _require_normalized(D1)
    _require_normalized(D2)
    if D1.H != D2.H:
        raise AlgebraMismatch("duality data for different bimodules")
    H, H1, H2 = D1.H, D1.Hbar, D2.Hbar
    v = (
        rebracket(fuse_object(l2_bimodule(D1.B), H2), H2)
        @ fuse_maps(D1.S.adjoint(), identity_map(H2))
        @ rebracket(fuse_object(H1, fuse_object(H, H2)), fuse_object(fuse_object(H1, H), H2))
        @ fuse_maps(identity_map(H1), D2.R)
        @ rebracket(H1, fuse_object(H1, l2_bimodule(D1.A)))
    )
    return BimoduleMap(H1, H2, v.matrix, "bilinear", validate=False)


def transport_duality(D: DualityData, u: BimoduleMap) -> DualityData:
    """Move the dual along a unitary ``u: Hbar -> K``."""
    R = fuse_maps(identity_map(D.H), u) @ D.R
    S = fuse_maps(u, identity_map(D.H)) @ D.S
    return DualityData(D.H, u.target, R, S, D.normalized)


def skew(D: DualityData, y: BimoduleMap) -> DualityData:
    """``((y (x) 1)R, (1 (x) y^{*-1})S)`` for invertible bilinear ``y`` on ``H``.

    Still satisfies the zig-zag equations; normalized only when ``y`` is unitary.
    """
    yinv_star = BimoduleMap(D.H, D.H, dagger(np.linalg.inv(y.matrix)), "bilinear", validate=False)
    R = fuse_maps(y, identity_map(D.Hbar)) @ D.R
    S = fuse_maps(identity_map(D.Hbar), yinv_star) @ D.S
    return DualityData(D.H, D.Hbar, R, S, normalized=False)


class JonesReport(NamedTuple):
    e1: np.ndarray
    e2: np.ndarray
    dim_r: float
    dim_s: float
    product: float
    projection_residual: float
    relation_residual: float
    order_gap: float  # smallest eigenvalue of e1 - e1 e2 e1


def jones_projections(D: DualityData) -> JonesReport:
    """``e1 = (R^*R)^{-1}(RR^* (x) 1)`` and ``e2 = (S^*S)^{-1}(1 (x) SS^*)`` on ``H Hbar H``."""
    H, Hb = D.H, D.Hbar
    if not D.A.is_factor or not D.B.is_factor:
        raise AlgebraMismatch("Jones projections are formed between factors")
    if H.dim == 0:
        raise ZeroModule("H is zero")
    dr = float(np.real(_central_values(D.R.adjoint() @ D.R)[0]))
    ds = float(np.real(_central_values(D.S.adjoint() @ D.S)[0]))
    left = fuse_object(fuse_object(H, Hb), H)
    right = fuse_object(H, fuse_object(Hb, H))
    e1 = fuse_maps(D.R @ D.R.adjoint(), identity_map(H)).matrix / dr
    t = rebracket(right, left).matrix
    e2 = t @ fuse_maps(identity_map(H), D.S @ D.S.adjoint()).matrix @ dagger(t) / ds
    proj = max(fro(e @ e - e) + fro(e - dagger(e)) for e in (e1, e2))
    rel = fro(e1 @ e2 @ e1 - e1 / (dr * ds))
    gap = e1 - e1 @ e2 @ e1
    order = float(np.linalg.eigvalsh((gap + dagger(gap)) / 2).min())
    return JonesReport(e1, e2, dr, ds, dr * ds, proj, rel, order)
