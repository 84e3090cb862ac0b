import numpy as np
import pytest

from helpers import random_algebra, random_bimodule
from l2fusion.algebra import Algebra
from l2fusion.bimodule import (
    Bimodule,
    _span_projector,
    bilinear_from_blocks,
    commutant_on,
    conjugation_permutation,
    direct_sum,
    external_tensor,
    fuse_object,
    identity_map,
    l2_bimodule,
    random_bilinear,
)
from l2fusion.duality import (
    DualityData,
    bar_involution,
    canonical_duality,
    canonical_state,
    compare_duals,
    dual_data,
    jones_projections,
    normalize,
    skew,
    solve_normalization_element,
    statistical_dimension,
    transport_duality,
)
from l2fusion.errors import NotFaithful, NotNormalized, NotPositiveDefinite, SingularState, ZeroModule, ZigzagViolation
from l2fusion.numerics import random_psd, random_unitary, unitarity_residual


def _invertible_bilinear(H, rng):
    y = random_bilinear(H, H, rng)
    return y + 0.1 * identity_map(H)


def test_canonical_duality_examples():
    A = Algebra((1, 2))
    D = canonical_duality(l2_bimodule(A))
    assert D.check().zigzag_ok and D.check().normalized
    np.testing.assert_array_equal(statistical_dimension(D), np.eye(2))
    H = Bimodule(Algebra((2,)), Algebra((3,)), ((1,),))
    D = canonical_duality(H)
    np.testing.assert_allclose((D.R.adjoint() @ D.R).matrix, np.eye(4))
    np.testing.assert_allclose((D.S.adjoint() @ D.S).matrix, np.eye(9))
    H = Bimodule(Algebra((2,)), Algebra((3,)), ((3,),))
    D = canonical_duality(H)
    np.testing.assert_allclose((D.R.adjoint() @ D.R).matrix, 3 * np.eye(4))


def test_canonical_duality_random(rng):
    for _ in range(25):
        H = random_bimodule(rng, random_algebra(rng, max_size=2), random_algebra(rng, max_size=2))
        D = canonical_duality(H)
        rep = D.check()
        assert rep.zigzag_ok and rep.normalized
        np.testing.assert_array_equal(statistical_dimension(D), H.m)


def test_dimension_of_inclusions():
    # L^2(M_{km}) over (M_k, M_{km}) has dimension m; over (C, M_n) dimension n
    for k, m in [(2, 2), (3, 2), (2, 3)]:
        H = Bimodule(Algebra((k,)), Algebra((k * m,)), ((m,),))
        assert statistical_dimension(canonical_duality(H))[0, 0] == m
    for n in (2, 3, 4):
        H = Bimodule(Algebra((1,)), Algebra((n,)), ((n,),))
        assert statistical_dimension(canonical_duality(H))[0, 0] == n


def test_solve_normalization_element(rng):
    np.testing.assert_allclose(solve_normalization_element(np.eye(3), np.eye(3)), np.eye(3), atol=1e-14)
    x = solve_normalization_element([[4.0]], [[1.0]])
    assert abs(x[0, 0] - 0.25 ** 0.25) < 1e-12
    for _ in range(50):
        n = int(rng.integers(1, 5))
        a = random_psd(n, rng) + 0.05 * np.eye(n)
        b = random_psd(n, rng) + 0.05 * np.eye(n)
        x = solve_normalization_element(a, b)
        assert np.linalg.eigvalsh(x).min() > 0
        xi = np.linalg.inv(x)
        res = np.linalg.norm(x @ a @ x - xi @ b @ xi)
        assert res < 1e-8 * (np.linalg.norm(a) + np.linalg.norm(b))
    with pytest.raises(NotPositiveDefinite):
        solve_normalization_element(np.diag([1.0, 0.0]), np.eye(2))
    with pytest.raises(NotPositiveDefinite):
        solve_normalization_element(np.eye(2), -np.eye(2))


def test_normalize_fixed_point_and_scaling():
    H = Bimodule(Algebra((2,)), Algebra((1, 2)), ((1, 2),))
    D = canonical_duality(H)
    N, x = normalize(H, D.Hbar, D.R, D.S)
    np.testing.assert_allclose(x.matrix, np.eye(H.dim), atol=1e-12)
    np.testing.assert_allclose(N.R.matrix, D.R.matrix, atol=1e-12)
    N, x = normalize(H, D.Hbar, 2 * D.R, 0.5 * D.S)
    np.testing.assert_allclose(N.R.matrix, D.R.matrix, atol=1e-12)
    np.testing.assert_allclose(N.S.matrix, D.S.matrix, atol=1e-12)


def test_normalize_skewed(rng):
    for _ in range(20):
        H = random_bimodule(rng, random_algebra(rng, max_size=2), random_algebra(rng, max_size=2))
        D = canonical_duality(H)
        y = _invertible_bilinear(H, rng)
        Dt = skew(D, y)
        rep = Dt.check()
        assert rep.zigzag_ok
        N, x = normalize(H, D.Hbar, Dt.R, Dt.S)
        rep = N.check()
        assert rep.zigzag_ok and rep.normalization < 1e-8
        # x y is unitary: the skew is undone up to a unitary
        assert unitarity_residual((x @ y).matrix) < 1e-8
        v = compare_duals(D, N)
        assert unitarity_residual(v.matrix) < 1e-8


def test_skew_is_detected(rng):
    H = Bimodule(Algebra((2,)), Algebra((2,)), ((2,),))
    D = canonical_duality(H)
    y = bilinear_from_blocks(H, H, {(0, 0): np.diag([2.0, 1.0])})
    Dt = skew(D, y)
    assert Dt.check().zigzag_ok
    assert not Dt.check().normalized
    with pytest.raises(NotNormalized):
        statistical_dimension(Dt)


def test_normalize_errors():
    H = Bimodule(Algebra((2,)), Algebra((1,)), ((2,),))
    D = canonical_duality(H)
    with pytest.raises(ZigzagViolation):
        normalize(H, D.Hbar, 2 * D.R, D.S)
    # a nearly singular skew keeps the zig-zags but leaves no positive-definite state
    y = bilinear_from_blocks(H, H, {(0, 0): np.diag([1.0, 1e-15])})
    Dt = skew(D, y)
    with pytest.raises(SingularState):
        normalize(H, D.Hbar, Dt.R, Dt.S)


def test_canonical_state(rng):
    for _ in range(15):
        H = random_bimodule(rng, random_algebra(rng, max_size=2), random_algebra(rng, max_size=2))
        D = canonical_duality(H)
        x, y = random_bilinear(H, H, rng), random_bilinear(H, H, rng)
        assert np.abs(canonical_state(D, x @ y) - canonical_state(D, y @ x)).max() < 1e-9
        np.testing.assert_allclose(canonical_state(D, identity_map(H)).real, H.m, atol=1e-12)
        # phi(p) = dim(pH) for projections, with pH read off from the ranks
        blocks = {}
        for (i, j), k in np.ndenumerate(H.m):
            r = int(rng.integers(0, k + 1))
            u = random_unitary(k, rng) if k else np.zeros((0, 0))
            blocks[i, j] = u[:, :r] @ u[:, :r].conj().T
        p = bilinear_from_blocks(H, H, blocks)
        ranks = np.array([[np.trace(blocks[i, j]).real for j in range(H.m.shape[1])] for i in range(H.m.shape[0])])
        pH = Bimodule(H.left, H.right, tuple(map(tuple, np.rint(ranks).astype(int))))
        np.testing.assert_allclose(canonical_state(D, p).real, statistical_dimension(canonical_duality(pH)), atol=1e-9)
        # faithful: positive nonzero x has positive trace
        z = random_bilinear(H, H, rng)
        assert canonical_state(D, z.adjoint() @ z).real.sum() > 0


def test_dimension_laws(rng):
    for _ in range(15):
        A, B, C = (random_algebra(rng, max_size=2) for _ in range(3))
        H, K = random_bimodule(rng, A, B), random_bimodule(rng, A, B)
        dH, dK = statistical_dimension(canonical_duality(H)), statistical_dimension(canonical_duality(K))
        np.testing.assert_array_equal(statistical_dimension(canonical_duality(direct_sum(H, K))), dH + dK)
        L = random_bimodule(rng, B, C)
        dL = statistical_dimension(canonical_duality(L))
        np.testing.assert_allclose(statistical_dimension(canonical_duality(fuse_object(H, L))), dH @ dL, atol=1e-12)
        T = external_tensor(H, random_bimodule(rng, C, C, max_mult=1))
        assert T.m.shape == (A.num_blocks * C.num_blocks, B.num_blocks * C.num_blocks)
        dT = statistical_dimension(canonical_duality(T))
        np.testing.assert_array_equal(dT, T.m)


def test_external_tensor_dimension(rng):
    H = Bimodule(Algebra((1, 2)), Algebra((2,)), ((1,), (2,)))
    K = Bimodule(Algebra((2,)), Algebra((1, 1)), ((1, 3),))
    dH = statistical_dimension(canonical_duality(H))
    dK = statistical_dimension(canonical_duality(K))
    np.testing.assert_array_equal(statistical_dimension(canonical_duality(external_tensor(H, K))), np.kron(dH, dK))


def _is_invertible_by_commutant(H):
    """Both actions faithful and the right commutant is exactly the left action."""
    try:
        c = commutant_on(H, "right")
        commutant_on(H, "left")
    except NotFaithful:
        return False
    left = [H.left_action(x) for x in H.left.matrix_units()]
    comm = [c.structure.represent(x) for x in c.algebra.matrix_units()]
    return np.linalg.norm(_span_projector(left) - _span_projector(comm)) < 1e-8


def test_invertibility_characterization(rng):
    hits = {True: 0, False: 0}
    for _ in range(40):
        A = random_algebra(rng, max_blocks=2, max_size=2)
        if rng.random() < 0.5:
            perm = rng.permutation(A.num_blocks)
            B = Algebra(tuple(A.block_sizes[p] for p in perm))
            H = Bimodule(A, B, tuple(map(tuple, np.eye(A.num_blocks, dtype=int)[:, np.argsort(perm)])))
        else:
            H = random_bimodule(rng, A, random_algebra(rng, max_blocks=2, max_size=2), max_mult=2)
        if H.dim > 12:
            continue
        d = statistical_dimension(canonical_duality(H))
        invertible = bool(np.all((d == 0) | (d == 1)) and (d.sum(0) == 1).all() and (d.sum(1) == 1).all())
        assert invertible == _is_invertible_by_commutant(H)
        hits[invertible] += 1
    assert hits[True] and hits[False]


def test_bar_involution(rng):
    for _ in range(10):
        H = random_bimodule(rng, random_algebra(rng, max_size=2), random_algebra(rng, max_size=2))
        D = canonical_duality(H)
        x = random_bilinear(H, H, rng)
        left, right = bar_involution(D, x), bar_involution(D, x, "right")
        assert np.linalg.norm(left.matrix - right.matrix) < 1e-9
        assert np.linalg.norm(bar_involution(dual_data(D), left).matrix - x.matrix) < 1e-9
        # in the canonical realization the bar is the transpose carried to Hbar
        P = conjugation_permutation(H)
        np.testing.assert_allclose(left.matrix, P @ x.matrix.T @ P.T, atol=1e-12)
        y = random_bilinear(H, H, rng)
        np.testing.assert_allclose(bar_involution(D, x @ y).matrix, (bar_involution(D, y) @ left).matrix, atol=1e-9)
        np.testing.assert_allclose(bar_involution(D, identity_map(H)).matrix, np.eye(H.dim))
        # bar of a projection is a projection
        blocks = {k: (np.eye(v) if v else np.zeros((0, 0))) for k, v in np.ndenumerate(H.m)}
        (i, j) = next(k for k, v in np.ndenumerate(H.m) if v)
        q = random_unitary(H.m[i, j], rng)[:, :1]
        blocks[i, j] = q @ q.conj().T
        p = bilinear_from_blocks(H, H, blocks)
        pb = bar_involution(D, p).matrix
        assert np.linalg.norm(pb @ pb - pb) < 1e-9 and np.linalg.norm(pb - pb.conj().T) < 1e-9


def test_bar_needs_normalization(rng):
    H = Bimodule(Algebra((2,)), Algebra((2,)), ((2,),))
    D = canonical_duality(H)
    Dt = skew(D, bilinear_from_blocks(H, H, {(0, 0): np.diag([3.0, 1.0])}))
    with pytest.raises(NotNormalized):
        bar_involution(Dt, identity_map(H))
    # the two bends disagree on skewed data
    forced = DualityData(Dt.H, Dt.Hbar, Dt.R, Dt.S, normalized=True)
    x = random_bilinear(H, H, rng)
    assert np.linalg.norm(bar_involution(forced, x).matrix - bar_involution(forced, x, "right").matrix) > 1e-3


def test_compare_duals(rng):
    H = Bimodule(Algebra((1, 2)), Algebra((2,)), ((2,), (1,)))
    D = canonical_duality(H)
    np.testing.assert_allclose(compare_duals(D, D).matrix, np.eye(H.dim), atol=1e-12)
    blocks = {k: random_unitary(v, rng) for k, v in np.ndenumerate(D.Hbar.m) if v}
    u = bilinear_from_blocks(D.Hbar, D.Hbar, blocks)
    D2 = transport_duality(D, u)
    assert D2.check().normalized and D2.check().zigzag_ok
    v = compare_duals(D, D2)
    np.testing.assert_allclose(v.matrix, u.matrix, atol=1e-12)
    # v intertwines R with R'
    from l2fusion.bimodule import fuse_maps

    np.testing.assert_allclose((fuse_maps(identity_map(H), v) @ D.R).matrix, D2.R.matrix, atol=1e-12)
    np.testing.assert_allclose((fuse_maps(v, identity_map(H)) @ D.S).matrix, D2.S.matrix, atol=1e-12)


def test_jones_projections(rng):
    A = Algebra((2,))
    rep = jones_projections(canonical_duality(l2_bimodule(A)))
    np.testing.assert_allclose(rep.e1, rep.e2, atol=1e-12)
    assert abs(rep.product - 1) < 1e-12
    H = Bimodule(Algebra((2,)), Algebra((1,)), ((2,),))
    rep = jones_projections(canonical_duality(H))
    assert abs(rep.product - 4) < 1e-12
    for _ in range(10):
        H = Bimodule(Algebra((int(rng.integers(1, 3)),)), Algebra((int(rng.integers(1, 3)),)), ((int(rng.integers(1, 4)),),))
        D = canonical_duality(H)
        for data in (D, skew(D, _invertible_bilinear(H, rng))):
            rep = jones_projections(data)
            assert rep.projection_residual < 1e-9
            assert rep.relation_residual < 1e-9
            assert rep.order_gap > -1e-9
            assert rep.product >= 1 - 1e-9
    with pytest.raises(ZeroModule):
        jones_projections(canonical_duality(Bimodule(Algebra((1,)), Algebra((1,)), ((0,),))))
