"""Exact integer linear algebra: Smith normal form, cokernel presentations,
and integer linear solving.

Everything here uses Python's arbitrary-precision integers; no floating point
and no machine-word overflow anywhere.  All routines are deterministic for a
fixed input: the Smith reduction always pivots on the smallest-absolute-value
nonzero entry, ties broken by row-major position.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class IntMatrix:
    """Dense integer matrix, row-major, immutable."""

    rows: int
    cols: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0:
            raise LatticeError("matrix must be nonempty")
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise LatticeError("entries shape does not match rows x cols")

    @staticmethod
    def from_rows(data: Sequence[Sequence[int]]) -> "IntMatrix":
        rows = tuple(tuple(int(x) for x in row) for row in data)
        if not rows:
            raise LatticeError("matrix must be nonempty")
        return IntMatrix(len(rows), len(rows[0]), rows)

    @staticmethod
    def identity(n: int) -> "IntMatrix":
        return IntMatrix(n, n, tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise LatticeError("dimension mismatch in matrix product")
        cols = tuple(zip(*other.entries))
        prod = tuple(
            tuple(sum(a * b for a, b in zip(row, col)) for col in cols) for row in self.entries
        )
        return IntMatrix(self.rows, other.cols, prod)

    def apply(self, vec: Sequence[int]) -> tuple[int, ...]:
        if len(vec) != self.cols:
            raise LatticeError("dimension mismatch in matrix-vector product")
        return tuple(sum(a * b for a, b in zip(row, vec)) for row in self.entries)

    def transpose(self) -> "IntMatrix":
        return IntMatrix(self.cols, self.rows, tuple(zip(*self.entries)))

    def diagonal(self) -> tuple[int, ...]:
        return tuple(self.entries[i][i] for i in range(min(self.rows, self.cols)))

    def determinant(self) -> int:
        """Exact determinant by fraction-free (Bareiss) elimination."""
        if self.rows != self.cols:
            raise LatticeError("determinant of a non-square matrix")
        n = self.rows
        m = [list(r) for r in self.entries]
        sign = 1
        prev = 1
        for k in range(n - 1):
            if m[k][k] == 0:
                pivot = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
                if pivot is None:
                    return 0
                m[k], m[pivot] = m[pivot], m[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
                m[i][k] = 0
            prev = m[k][k]
        return sign * m[n - 1][n - 1]


@dataclass(frozen=True)
class SnfDecomposition:
    """U @ A @ V == S with U, V unimodular and S in Smith normal form."""

    u: IntMatrix
    s: IntMatrix
    v: IntMatrix

    def verify(self, a: IntMatrix) -> None:
        if (self.u @ a @ self.v).entries != self.s.entries:
            raise LatticeError("SNF verification failed: U*A*V != S")
        if abs(self.u.determinant()) != 1 or abs(self.v.determinant()) != 1:
            raise LatticeError("SNF verification failed: transform not unimodular")
        diag = self.s.diagonal()
        for i in range(self.s.rows):
            for j in range(self.s.cols):
                if i != j and self.s.entries[i][j] != 0:
                    raise LatticeError("SNF verification failed: off-diagonal entry")
        for d, e in zip(diag, diag[1:]):
            if d == 0 and e != 0:
                raise LatticeError("SNF verification failed: zero before nonzero on diagonal")
            if d != 0 and e % d != 0:
                raise LatticeError("SNF verification failed: divisibility chain broken")

    def invariant_factors(self) -> tuple[int, ...]:
        return tuple(d for d in self.s.diagonal() if d != 0)


def _pivot(s: list[list[int]], t: int, rows: int, cols: int) -> Optional[tuple[int, int]]:
    best = None
    best_abs = None
    for i in range(t, rows):
        for j in range(t, cols):
            v = s[i][j]
            if v != 0 and (best_abs is None or abs(v) < best_abs):
                best, best_abs = (i, j), abs(v)
    return best


def smith_normal_form(a: IntMatrix) -> SnfDecomposition:
    """Smith normal form with explicit unimodular transforms.

    Returns (U, S, V) with U*A*V = S, S diagonal with each diagonal entry
    dividing the next, diagonal entries nonnegative.
    """
    m, n = a.rows, a.cols
    s = [list(r) for r in a.entries]
    u = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    v = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        s[i], s[j] = s[j], s[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in s:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, mult):
        # row_dst += mult * row_src
        s[dst] = [x + mult * y for x, y in zip(s[dst], s[src])]
        u[dst] = [x + mult * y for x, y in zip(u[dst], u[src])]

    def add_col(dst, src, mult):
        for row in s:
            row[dst] += mult * row[src]
        for row in v:
            row[dst] += mult * row[src]

    t = 0
    while t < min(m, n):
        if _pivot(s, t, m, n) is None:
            break
        while True:
            i0, j0 = _pivot(s, t, m, n)
            if i0 != t:
                swap_rows(t, i0)
            if j0 != t:
                swap_cols(t, j0)
            dirty = False
            for i in range(t + 1, m):
                if s[i][t] != 0:
                    q = s[i][t] // s[t][t]
                    if q:
                        add_row(i, t, -q)
                    if s[i][t] != 0:
                        dirty = True
            for j in range(t + 1, n):
                if s[t][j] != 0:
                    q = s[t][j] // s[t][t]
                    if q:
                        add_col(j, t, -q)
                    if s[t][j] != 0:
                        dirty = True
            if dirty:
                continue
            d = s[t][t]
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if s[i][j] % d != 0),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, 1)
        if s[t][t] < 0:
            s[t] = [-x for x in s[t]]
            u[t] = [-x for x in u[t]]
        t += 1

    decomp = SnfDecomposition(
        IntMatrix.from_rows(u), IntMatrix.from_rows(s), IntMatrix.from_rows(v)
    )
    decomp.verify(a)
    return decomp


@dataclass(frozen=True)
class FinAbGroupPresentation:
    """Presentation of a finitely generated abelian group Z^rank + sum Z/f_i.

    ``projection`` maps the ambient lattice Z^ambient_dim onto canonical
    coordinates: the first ``rank`` rows give the free part, the remaining
    rows give torsion coordinates which are meaningful modulo the aligned
    invariant factor.
    """

    rank: int
    invariant_factors: tuple[int, ...]
    ambient_dim: int
    projection: IntMatrix

    def __post_init__(self):
        if self.rank + len(self.invariant_factors) > self.ambient_dim:
            raise LatticeError("rank plus torsion length exceeds ambient dimension")
        if any(f <= 1 for f in self.invariant_factors):
            raise LatticeError("invariant factors must be > 1")
        expected = self.rank + len(self.invariant_factors)
        if self.projection.cols != self.ambient_dim:
            raise LatticeError("projection matrix has wrong shape")
        # the trivial quotient keeps a single zero row so the matrix is nonempty
        if self.projection.rows != max(expected, 1):
            raise LatticeError("projection matrix has wrong shape")

    @property
    def torsion_order(self) -> int:
        h = 1
        for f in self.invariant_factors:
            h *= f
        return h

    def free_part(self, vec: Sequence[int]) -> tuple[int, ...]:
        full = self.projection.apply(vec)
        return full[: self.rank]

    def class_coords(self, vec: Sequence[int]) -> tuple[int, ...]:
        """Canonical coordinates: free part, then torsion residues in [0, f_i)."""
        if self.rank + len(self.invariant_factors) == 0:
            return ()
        full = self.projection.apply(vec)
        free = full[: self.rank]
        tors = tuple(x % f for x, f in zip(full[self.rank :], self.invariant_factors))
        return free + tors

    def reduce_coords(self, coords: Sequence[int]) -> tuple[int, ...]:
        free = tuple(coords[: self.rank])
        tors = tuple(x % f for x, f in zip(coords[self.rank :], self.invariant_factors))
        return free + tors


def cokernel(a: IntMatrix) -> FinAbGroupPresentation:
    """Presentation of coker(A) = Z^rows / (column span of A).

    A is the matrix of a map Z^cols -> Z^rows; the quotient is presented with
    an explicit projection from the ambient Z^rows.
    """
    snf = smith_normal_form(a)
    diag = snf.s.diagonal()
    nonzero = [d for d in diag if d != 0]
    r = len(nonzero)
    rank = a.rows - r
    factors = tuple(d for d in nonzero if d > 1)

    u_rows = snf.u.entries
    free_rows = [u_rows[i] for i in range(r, a.rows)]
    torsion_rows = [u_rows[i] for i, d in enumerate(diag) if d > 1]
    projection = IntMatrix.from_rows(free_rows + torsion_rows) if (free_rows or torsion_rows) else None
    if projection is None:
        # Trivial quotient: keep a single zero row so the matrix stays nonempty.
        projection = IntMatrix.from_rows([[0] * a.rows])
        return FinAbGroupPresentation(0, (), a.rows, projection)

    pres = FinAbGroupPresentation(rank, factors, a.rows, projection)
    _check_relations(pres, a)
    return pres


def _check_relations(pres: FinAbGroupPresentation, a: IntMatrix) -> None:
    # projection composed with the relation map must vanish in the quotient
    prod = pres.projection @ a
    for i in range(pres.rank):
        if any(x != 0 for x in prod.entries[i]):
            raise LatticeError("free projection does not kill relations")
    for k, f in enumerate(pres.invariant_factors):
        if any(x % f != 0 for x in prod.entries[pres.rank + k]):
            raise LatticeError("torsion projection does not kill relations mod factor")


def solve_preimage(a: IntMatrix, target: Sequence[int]) -> Optional[tuple[int, ...]]:
    """Some x with A @ x == target, or None when target is not in the image.

    The returned preimage is deterministic: free coordinates of the solution
    in Smith coordinates are set to zero.
    """
    if len(target) != a.rows:
        raise LatticeError("target length does not match matrix rows")
    snf = smith_normal_form(a)
    c = snf.u.apply(target)
    diag = snf.s.diagonal()
    y = [0] * a.cols
    for i in range(min(a.rows, a.cols)):
        d = diag[i]
        if d == 0:
            if c[i] != 0:
                return None
        else:
            if c[i] % d != 0:
                return None
            y[i] = c[i] // d
    for i in range(min(a.rows, a.cols), a.rows):
        if c[i] != 0:
            return None
    return snf.v.apply(y)
