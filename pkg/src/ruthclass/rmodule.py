"""Module-level linear algebra over a coefficient algebra.

Matrices over the algebra are handled by passing to the rational
coordinates: an R-linear map R^n -> R^m becomes an (m dim) x (n dim)
rational matrix built from multiplication operators. Freeness of
submodules is certified by a unit-pivot column echelon; over a jet algebra
(a local ring) a generating family spans a free direct summand exactly
when it reduces with unit pivots, which is the exact-arithmetic version of
constant rank.
"""

from . import linalg
from .linalg import F0, F1


def to_q(R, M, rows, cols):
    """Rational block matrix of an R-matrix acting on coordinate columns."""
    big = linalg.zeros(rows * R.dim, cols * R.dim)
    for i in range(rows):
        for j in range(cols):
            op = R.mult_op(M[i][j])
            for r in range(R.dim):
                for c in range(R.dim):
                    big[i * R.dim + r][j * R.dim + c] = op[r][c]
    return big


def vec_to_q(R, v):
    out = []
    for x in v:
        out.extend(x)
    return out


def vec_from_q(R, coords, n):
    return [tuple(coords[i * R.dim:(i + 1) * R.dim]) for i in range(n)]


def rsolve(R, M, b, rows=None, cols=None):
    """Particular solution of M x = b over the algebra, or None."""
    if rows is None:
        rows = len(M)
    if cols is None:
        cols = len(M[0]) if M else 0
    if cols == 0:
        return [] if all(R.is_zero(x) for x in b) else None
    sol = linalg.solve(to_q(R, M, rows, cols), vec_to_q(R, b))
    if sol is None:
        return None
    return vec_from_q(R, sol, cols)


def rkernel_generators(R, M, rows, cols):
    """R-vectors generating the kernel of M (the full rational kernel is an
    R-submodule, so a rational basis of it generates over R)."""
    if cols == 0:
        return []
    ker = linalg.kernel_basis(to_q(R, M, rows, cols))
    return [vec_from_q(R, v, cols) for v in ker]


class EchelonFailure(Exception):
    """A generating family that does not reduce with unit pivots."""

    def __init__(self, row, column):
        self.row = row
        self.column = column
        super().__init__("no unit pivot clears row %d (column %d left over)" % (row, column))


def unit_pivot_echelon(R, cols_in, rows):
    """Column echelon with unit pivots over the algebra.

    cols_in is a list of R-vectors of length rows generating a submodule of
    R^rows. Returns (basis, pivot_rows): basis columns have entry one at
    their pivot row and zero at every other pivot row, pivot_rows strictly
    increasing. Raises EchelonFailure when some leftover column is nonzero
    but has no unit entry, which is exactly failure of freeness with a
    distinguished complement.
    """
    cols = [list(c) for c in cols_in]
    pivots = []
    used = set()
    for r in range(rows):
        pick = next((j for j, c in enumerate(cols)
                     if j not in used and R.is_unit(c[r])), None)
        if pick is None:
            continue
        used.add(pick)
        inv = R.inv(cols[pick][r])
        cols[pick] = [R.mul(inv, x) for x in cols[pick]]
        col = cols[pick]
        for j, c in enumerate(cols):
            if j == pick or R.is_zero(c[r]):
                continue
            f = c[r]
            cols[j] = [R.sub(x, R.mul(f, y)) for x, y in zip(c, col)]
        pivots.append((r, pick))
    for j, c in enumerate(cols):
        if j in used:
            continue
        for r, x in enumerate(c):
            if not R.is_zero(x):
                raise EchelonFailure(r, j)
    basis = [cols[j] for _, j in pivots]
    pivot_rows = [r for r, _ in pivots]
    return basis, pivot_rows


def basis_matrix(R, basis, rows):
    """Columns into a rows x len(basis) R-matrix."""
    return [[basis[j][i] for j in range(len(basis))] for i in range(rows)]


def complement_pivots(pivot_rows, rows):
    return [r for r in range(rows) if r not in pivot_rows]
