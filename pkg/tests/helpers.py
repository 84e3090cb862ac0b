"""Random instance generators shared by the test modules."""

import numpy as np

from l2fusion.algebra import Algebra, Homomorphism, canonical_embedding
from l2fusion.bimodule import Bimodule
from l2fusion.numerics import random_unitary


def random_algebra(rng, max_blocks=3, max_size=3):
    r = int(rng.integers(1, max_blocks + 1))
    return Algebra(tuple(int(x) for x in rng.integers(1, max_size + 1, size=r)))


def random_bimodule(rng, A=None, B=None, max_mult=2, nonzero=True):
    A = A or random_algebra(rng)
    B = B or random_algebra(rng)
    while True:
        m = rng.integers(0, max_mult + 1, size=(A.num_blocks, B.num_blocks))
        if not nonzero or m.any():
            return Bimodule(A, B, tuple(map(tuple, m)))


def random_inclusion_matrix(rng, r, s, max_mult=2):
    """Nonnegative r x s matrix with no zero rows and no zero columns."""
    lam = rng.integers(0, max_mult + 1, size=(r, s))
    for i in range(r):
        if not lam[i].any():
            lam[i, rng.integers(s)] = 1
    for j in range(s):
        if not lam[:, j].any():
            lam[rng.integers(r), j] = 1
    return lam


def random_inclusion(rng, A=None, max_target_blocks=3, max_mult=2, twist=True):
    A = A or random_algebra(rng, max_size=2)
    s = int(rng.integers(1, max_target_blocks + 1))
    lam = random_inclusion_matrix(rng, A.num_blocks, s, max_mult)
    B = Algebra(tuple(int(x) for x in np.array(A.block_sizes) @ lam))
    if twist:
        return Homomorphism(A, B, lam, tuple(random_unitary(k, rng) for k in B.block_sizes))
    return canonical_embedding(A, B, lam)


def random_tower(rng, stages=2, **kw):
    homs = [random_inclusion(rng, **kw)]
    for _ in range(stages - 1):
        homs.append(random_inclusion(rng, A=homs[-1].target, **kw))
    return homs


def random_small_inclusion(rng, A, max_size=3, max_blocks=3, twist=True):
    """Injective unital inclusion of ``A`` whose target blocks all have size <= max_size."""
    sizes = np.array(A.block_sizes)
    if sizes.max() > max_size:
        raise ValueError("source blocks already exceed max_size")
    while True:
        s = int(rng.integers(1, max_blocks + 1))
        cols = []
        for _ in range(s):
            while True:
                c = rng.integers(0, max_size + 1, size=A.num_blocks)
                if c.any() and sizes @ c <= max_size:
                    cols.append(c)
                    break
        lam = np.stack(cols, axis=1)
        if (lam.sum(axis=1) > 0).all():
            break
    B = Algebra(tuple(int(x) for x in sizes @ lam))
    if twist:
        return Homomorphism(A, B, lam, tuple(random_unitary(k, rng) for k in B.block_sizes))
    return canonical_embedding(A, B, lam)


def random_small_tower(rng, stages=2, max_size=3):
    A = random_algebra(rng, max_size=max_size)
    homs = []
    for _ in range(stages):
        homs.append(random_small_inclusion(rng, A, max_size=max_size))
        A = homs[-1].target
    return homs


def random_full_bimodule(rng, A, B, max_mult=2):
    """Every multiplicity in ``1..max_mult``, so that fusions never vanish."""
    m = rng.integers(1, max_mult + 1, size=(A.num_blocks, B.num_blocks))
    return Bimodule(A, B, tuple(map(tuple, m)))
