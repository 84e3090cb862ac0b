import numpy as np
import pytest

from l2fusion.algebra import (
    Algebra,
    Functional,
    Homomorphism,
    canonical_embedding,
    compose_hom,
    corner,
    decompose_star_algebra,
    homomorphism_from_images,
    identity_hom,
    minimal_central_projections,
)
from l2fusion.errors import AlgebraMismatch, DimensionMismatch, NotProjection
from l2fusion.numerics import random_unitary, unitarity_residual


def test_scalar_embedding(rng):
    f = canonical_embedding(Algebra((1,)), Algebra((2,)), [[2]])
    a = Algebra((1,)).scalar(3 - 1j)
    np.testing.assert_allclose(f(a).blocks[0], (3 - 1j) * np.eye(2))


def test_tensor_embedding(rng):
    f = canonical_embedding(Algebra((2,)), Algebra((6,)), [[3]])
    assert f.homomorphism_residual() < 1e-10
    x = Algebra((2,)).random_element(rng)
    np.testing.assert_allclose(f(x).blocks[0], np.kron(x.blocks[0], np.eye(3)))


def test_diagonal_embedding():
    f = canonical_embedding(Algebra((1, 1)), Algebra((2,)), [[1], [1]])
    x = Algebra((1, 1)).element([[[2]], [[5]]])
    np.testing.assert_allclose(f(x).blocks[0], np.diag([2, 5]))


def test_unitality_enforced():
    with pytest.raises(DimensionMismatch):
        canonical_embedding(Algebra((2,)), Algebra((5,)), [[2]])


def test_compose_examples(rng):
    C, M2, M6 = Algebra((1,)), Algebra((2,)), Algebra((6,))
    f = canonical_embedding(C, M2, [[2]])
    g = canonical_embedding(M2, M6, [[3]])
    h = compose_hom(f, g)
    assert h.multiplicities.tolist() == [[6]]
    x = C.random_element(rng)
    assert (h(x) - g(f(x))).norm() < 1e-12
    assert np.array_equal(compose_hom(f, identity_hom(M2)).multiplicities, f.multiplicities)
    f2 = canonical_embedding(Algebra((1, 1)), M2, [[1], [1]])
    g2 = canonical_embedding(M2, Algebra((4,)), [[2]])
    assert compose_hom(f2, g2).multiplicities.tolist() == [[2], [2]]


def test_compose_random_towers(rng):
    for _ in range(40):
        A = Algebra(tuple(rng.integers(1, 3, size=rng.integers(1, 3))))
        lam1 = rng.integers(0, 3, size=(A.num_blocks, int(rng.integers(1, 3))))
        lam1[:, 0] += lam1.sum(axis=1) == 0
        lam1[0, :] += lam1.sum(axis=0) == 0
        B = Algebra(tuple(np.array(A.block_sizes) @ lam1))
        lam2 = rng.integers(0, 3, size=(B.num_blocks, int(rng.integers(1, 3))))
        lam2[:, 0] += lam2.sum(axis=1) == 0
        lam2[0, :] += lam2.sum(axis=0) == 0
        C = Algebra(tuple(np.array(B.block_sizes) @ lam2))
        us1 = tuple(random_unitary(k, rng) for k in B.block_sizes)
        us2 = tuple(random_unitary(k, rng) for k in C.block_sizes)
        f = Homomorphism(A, B, lam1, us1)
        g = Homomorphism(B, C, lam2, us2)
        h = compose_hom(f, g)
        assert np.array_equal(h.multiplicities, lam1 @ lam2)
        for u in h.block_unitaries:
            assert unitarity_residual(u) < 1e-10
        for x in A.matrix_units():
            assert (h(x) - g(f(x))).norm() < 1e-10


def test_compose_mismatch():
    f = identity_hom(Algebra((2,)))
    g = identity_hom(Algebra((3,)))
    with pytest.raises(AlgebraMismatch):
        compose_hom(f, g)


def test_corner():
    A = Algebra((3,))
    c = corner(A, A.unit())
    assert c.algebra == A
    p = A.element([np.diag([1, 1, 0])])
    assert corner(A, p).algebra == Algebra((2,))
    B = Algebra((2, 2))
    assert corner(B, B.central_projection(0)).algebra == Algebra((2,))
    with pytest.raises(NotProjection):
        corner(A, A.scalar(2))


def test_minimal_central_projections():
    ps = minimal_central_projections(Algebra((3,)))
    assert len(ps) == 1 and np.allclose(ps[0].blocks[0], np.eye(3))
    A = Algebra((1, 2))
    ps = minimal_central_projections(A)
    assert np.allclose(ps[0].blocks[0], 1) and np.allclose(ps[0].blocks[1], 0)
    assert (ps[0] + ps[1]).close_to(A.unit())
    assert (ps[0] @ ps[1]).norm() == 0


def test_functional_positivity_both_directions(rng):
    A = Algebra((1, 2, 3))
    for _ in range(50):
        psd = A.random_positive(rng, rank_deficient=True)
        phi = Functional.from_element(psd)
        assert phi.is_positive
        # positive functional takes nonnegative values on positives
        x = A.random_positive(rng)
        assert phi(x).real >= -1e-12 and abs(phi(x).imag) < 1e-9
        h = A.random_hermitian(rng)
        psi = Functional.from_element(h)
        if not psi.is_positive:
            # a negative eigenvector gives a negative value
            i = next(k for k, b in enumerate(h.blocks) if np.linalg.eigvalsh(b).min() < 0)
            w, v = np.linalg.eigh(h.blocks[i])
            blocks = [np.zeros((n, n)) for n in A.block_sizes]
            blocks[i] = np.outer(v[:, 0], v[:, 0].conj())
            assert psi(A.element(blocks)).real < 0


def test_functional_trace():
    A = Algebra((2,))
    tr = Functional.trace(A)
    assert tr(A.unit()) == 2
    assert tr.l1_norm() == pytest.approx(2)


def test_ingest_homomorphism(rng):
    A, B = Algebra((1, 2)), Algebra((4, 3))
    lam = np.array([[2, 1], [1, 1]])
    f = Homomorphism(A, B, lam, tuple(random_unitary(k, rng) for k in B.block_sizes))
    g = homomorphism_from_images(A, B, f.apply)
    assert np.array_equal(g.multiplicities, lam)
    for x in A.matrix_units():
        assert (g(x) - f(x)).norm() < 1e-10


def test_decompose_star_algebra(rng):
    A = Algebra((2, 1))
    mult = (2, 3)
    U = random_unitary(7, rng)
    from l2fusion.algebra import StarAlgebraStructure

    concrete = StarAlgebraStructure(A, mult, U)
    span = [concrete.represent(x) for x in A.matrix_units()]
    s = decompose_star_algebra(span)
    assert sorted(zip(s.algebra.block_sizes, s.multiplicities)) == [(1, 3), (2, 2)]
    x = A.random_element(rng)
    op = concrete.represent(x)
    assert np.linalg.norm(s.represent(s.extract(op)) - op) < 1e-9


def test_json_roundtrip():
    A = Algebra.from_json({"blocks": [1, 2]})
    assert A.to_json() == {"blocks": [1, 2]}
    h = Homomorphism.from_json({"source": "A", "target": "B", "multiplicities": [[1], [1]]}, {"A": A, "B": Algebra((3,))})
    assert h.multiplicities.tolist() == [[1], [1]]
