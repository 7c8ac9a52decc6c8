import random
from fractions import Fraction
from itertools import combinations

import pytest

from divzeta.intlinalg import (
    IntMatrix,
    LatticeError,
    cokernel,
    smith_normal_form,
    solve_preimage,
)


def test_identity_snf():
    a = IntMatrix.identity(2)
    snf = smith_normal_form(a)
    assert snf.s.entries == IntMatrix.identity(2).entries
    assert abs(snf.u.determinant()) == 1
    assert abs(snf.v.determinant()) == 1


def test_snf_2x2_invariant_factors():
    # hand reduction of [[2,4],[6,8]]: gcd of entries 2, |det| 8 -> (2, 4)
    snf = smith_normal_form(IntMatrix.from_rows([[2, 4], [6, 8]]))
    assert snf.invariant_factors() == (2, 4)


def test_snf_p2_ray_matrix():
    snf = smith_normal_form(IntMatrix.from_rows([[1, 0], [0, 1], [-1, -1]]))
    assert snf.s.diagonal() == (1, 1)


def test_snf_deterministic():
    a = IntMatrix.from_rows([[3, 1, -2], [0, 4, 5]])
    first = smith_normal_form(a)
    second = smith_normal_form(a)
    assert first.u.entries == second.u.entries
    assert first.v.entries == second.v.entries
    assert first.s.entries == second.s.entries


def _rational_rank(rows):
    rows = [list(map(Fraction, r)) for r in rows]
    rank = 0
    for col in range(len(rows[0])):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                f = rows[i][col] / rows[rank][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def _torsion_order_by_minors(a: IntMatrix, rank: int) -> int:
    """gcd of all rank x rank minors: the index of the image in its saturation."""
    if rank == 0:
        return 1
    g = 0
    for rows in combinations(range(a.rows), rank):
        for cols in combinations(range(a.cols), rank):
            sub = IntMatrix.from_rows(
                [[a.entries[i][j] for j in cols] for i in rows]
            )
            g = _gcd(g, abs(sub.determinant()))
    return g if g else 1


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


COKERNEL_CASES = [
    ([[1, 0], [0, 1], [-1, -1]], 1, 1),  # P^2 rays
    ([[1, 0], [-1, 0], [0, 1], [0, -1]], 2, 1),  # P^1 x P^1 rays
    ([[1, 0], [0, 1], [-1, -2]], 1, 1),  # P(1,1,2) rays
]


@pytest.mark.parametrize("rows,rank,torsion", COKERNEL_CASES)
def test_cokernel_examples(rows, rank, torsion):
    pres = cokernel(IntMatrix.from_rows(rows))
    assert pres.rank == rank
    assert pres.torsion_order == torsion


def test_cokernel_with_torsion():
    # Z^2 / <(2,0),(0,3)> = Z/2 + Z/3 = Z/6 presented as factors (1 excluded)
    pres = cokernel(IntMatrix.from_rows([[2, 0], [0, 3]]))
    assert pres.rank == 0
    assert pres.torsion_order == 6


def test_cokernel_random_matches_minor_oracle():
    rng = random.Random(12345)
    for _ in range(40):
        rows = rng.randint(1, 3)
        cols = rng.randint(1, 3)
        a = IntMatrix.from_rows(
            [[rng.randint(-4, 4) for _ in range(cols)] for _ in range(rows)]
        )
        pres = cokernel(a)
        col_rank = _rational_rank(list(zip(*a.entries)))
        assert pres.rank == rows - col_rank
        assert pres.torsion_order == _torsion_order_by_minors(a, col_rank)


def test_snf_random_properties():
    rng = random.Random(424242)
    for _ in range(60):
        m = rng.randint(1, 5)
        n = rng.randint(1, 5)
        a = IntMatrix.from_rows(
            [[rng.randint(-9, 9) for _ in range(n)] for _ in range(m)]
        )
        snf = smith_normal_form(a)  # verify() runs inside
        diag = snf.s.diagonal()
        for d, e in zip(diag, diag[1:]):
            if d != 0:
                assert e % d == 0
            else:
                assert e == 0


def test_solve_preimage_identity():
    assert solve_preimage(IntMatrix.identity(3), (5, -2, 7)) == (5, -2, 7)


def test_solve_preimage_parity_obstruction():
    assert solve_preimage(IntMatrix.from_rows([[2]]), (3,)) is None


def test_solve_preimage_p2_projection():
    pres = cokernel(IntMatrix.from_rows([[1, 0], [0, 1], [-1, -1]]))
    x = solve_preimage(pres.projection, (2,))
    assert x is not None
    assert pres.projection.apply(x) == (2,)


def test_solve_preimage_random_exact():
    rng = random.Random(999)
    for _ in range(50):
        m = rng.randint(1, 4)
        n = rng.randint(1, 4)
        a = IntMatrix.from_rows(
            [[rng.randint(-5, 5) for _ in range(n)] for _ in range(m)]
        )
        x0 = [rng.randint(-3, 3) for _ in range(n)]
        t = a.apply(x0)
        x = solve_preimage(a, t)
        assert x is not None
        assert a.apply(x) == t


def test_empty_matrix_rejected():
    with pytest.raises(LatticeError):
        IntMatrix.from_rows([])
