"""Exact linear algebra over Q.

Matrices are lists of rows of Fraction. All pivoting scans rows and columns
in index order, so every result is deterministic; there is no numerical
tie-breaking because there are no numerics.
"""

from fractions import Fraction

F0 = Fraction(0)
F1 = Fraction(1)


def zeros(m, n):
    return [[F0] * n for _ in range(m)]


def identity(n):
    M = zeros(n, n)
    for i in range(n):
        M[i][i] = F1
    return M


def copy(M):
    return [row[:] for row in M]


def shape(M):
    return (len(M), len(M[0]) if M else 0)


def add(A, B):
    assert shape(A) == shape(B)
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def sub(A, B):
    assert shape(A) == shape(B)
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def scale(c, A):
    return [[c * a for a in row] for row in A]


def mul(A, B):
    ma, ka = shape(A)
    kb, nb = shape(B)
    assert ka == kb, (ka, kb)
    out = zeros(ma, nb)
    for i in range(ma):
        Ai = A[i]
        oi = out[i]
        for t in range(ka):
            a = Ai[t]
            if a:
                Bt = B[t]
                for j in range(nb):
                    if Bt[j]:
                        oi[j] += a * Bt[j]
    return out


def matvec(A, v):
    m, n = shape(A)
    assert len(v) == n
    return [sum((row[j] * v[j] for j in range(n) if v[j]), F0) for row in A]


def transpose(A):
    m, n = shape(A)
    return [[A[i][j] for i in range(m)] for j in range(n)]


def is_zero(A):
    return all(not x for row in A for x in row)


def rref(M):
    """Reduced row echelon form. Returns (R, pivot_columns)."""
    R = copy(M)
    m, n = shape(R)
    pivots = []
    r = 0
    for c in range(n):
        if r == m:
            break
        p = next((i for i in range(r, m) if R[i][c]), None)
        if p is None:
            continue
        R[r], R[p] = R[p], R[r]
        inv = F1 / R[r][c]
        R[r] = [x * inv for x in R[r]]
        for i in range(m):
            if i != r and R[i][c]:
                f = R[i][c]
                R[i] = [x - f * y for x, y in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
    return R, pivots


def rank(M):
    if not M or not M[0]:
        return 0
    return len(rref(M)[1])


def solve(A, b):
    """Particular solution of A x = b with free variables set to zero.

    Returns None when the system is inconsistent. The free-variables-zero
    convention plus fixed column order makes the witness deterministic and
    of minimal support among echelon back-substitutions.
    """
    m, n = shape(A)
    assert len(b) == m
    aug = [A[i][:] + [b[i]] for i in range(m)]
    R, pivots = rref(aug) if m else ([], [])
    if n in pivots:
        return None
    x = [F0] * n
    for r, c in enumerate(pivots):
        x[c] = R[r][n]
    return x


def kernel_basis(A):
    """Basis of the null space, one vector per free column, in column order."""
    m, n = shape(A)
    if n == 0:
        return []
    if m == 0:
        return [e for e in identity(n)]
    R, pivots = rref(A)
    free = [j for j in range(n) if j not in pivots]
    basis = []
    for j in free:
        v = [F0] * n
        v[j] = F1
        for r, c in enumerate(pivots):
            v[c] = -R[r][j]
        basis.append(v)
    return basis


def left_kernel_basis(A):
    m, n = shape(A)
    if n == 0:
        return [e for e in identity(m)]
    return kernel_basis(transpose(A))


def inverse(A):
    m, n = shape(A)
    assert m == n
    aug = [A[i][:] + identity(n)[i] for i in range(n)]
    R, pivots = rref(aug)
    if pivots != list(range(n)):
        return None
    return [R[i][n:] for i in range(n)]


def hstack(blocks):
    assert blocks
    m = len(blocks[0])
    assert all(len(B) == m for B in blocks)
    return [sum((B[i] for B in blocks), []) for i in range(m)]


def vstack(blocks):
    return [row[:] for B in blocks for row in B]


def frac(x):
    """Coerce ints and 'p/q' strings to Fraction; reject floats."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError("exact rational expected, got %r" % (x,))
