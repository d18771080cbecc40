"""Finite dimensional commutative coefficient algebras over Q.

Two kinds are supported: the point algebra (Q itself) and jet algebras
Q[x_1..x_n] truncated above a total degree. Algebra elements are tuples of
Fraction coordinates in the monomial basis; derivations are dim x dim
rational matrices acting on coordinates.
"""

import itertools
from fractions import Fraction

from . import linalg
from .linalg import F0, F1, frac


class AlgebraError(Exception):
    pass


def _monomials(n, order):
    """Exponent tuples of total degree <= order, by (degree, lex)."""
    out = []
    for d in range(order + 1):
        out.extend(
            sorted(e for e in itertools.product(range(d + 1), repeat=n) if sum(e) == d)
        )
    return out


def _mono_label(exps):
    if not any(exps):
        return "1"
    parts = []
    for i, e in enumerate(exps):
        if e == 0:
            continue
        var = "x" if len(exps) == 1 else "x%d" % (i + 1)
        parts.append(var if e == 1 else "%s^%d" % (var, e))
    return "*".join(parts)


class CoeffAlgebra:
    """Commutative Q-algebra with a distinguished basis and full mult table.

    mult[i][j] is the coordinate tuple of basis_i * basis_j. The table is
    the single source of truth; validate() checks it is a commutative,
    associative, unital algebra and names the first broken axiom.
    """

    def __init__(self, kind, labels, mult, unit_index=0, jet_params=None):
        self.kind = kind
        self.labels = list(labels)
        self.dim = len(self.labels)
        self.mult = mult
        self.unit_index = unit_index
        self.jet_params = jet_params
        self._derivations = None

    def __eq__(self, other):
        if not isinstance(other, CoeffAlgebra):
            return NotImplemented
        return (self.kind == other.kind and self.labels == other.labels
                and self.mult == other.mult
                and self.unit_index == other.unit_index)

    # -- constructors

    @classmethod
    def point(cls):
        return cls("point", ["1"], [[(F1,)]])

    @classmethod
    def jet(cls, n, order):
        assert n >= 1 and order >= 0
        monos = _monomials(n, order)
        index = {e: i for i, e in enumerate(monos)}
        dim = len(monos)
        mult = []
        for a in monos:
            row = []
            for b in monos:
                c = tuple(x + y for x, y in zip(a, b))
                v = [F0] * dim
                if sum(c) <= order:
                    v[index[c]] = F1
                row.append(tuple(v))
            mult.append(row)
        alg = cls("jet", [_mono_label(e) for e in monos], mult,
                  jet_params=(n, order))
        alg.monomials = monos
        alg.mono_index = index
        return alg

    # -- element helpers

    def zero(self):
        return (F0,) * self.dim

    def one(self):
        v = [F0] * self.dim
        v[self.unit_index] = F1
        return tuple(v)

    def from_rational(self, q):
        v = [F0] * self.dim
        v[self.unit_index] = frac(q)
        return tuple(v)

    def add(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def sub(self, a, b):
        return tuple(x - y for x, y in zip(a, b))

    def neg(self, a):
        return tuple(-x for x in a)

    def smul(self, c, a):
        return tuple(c * x for x in a)

    def mul(self, a, b):
        acc = [F0] * self.dim
        for i, x in enumerate(a):
            if not x:
                continue
            for j, y in enumerate(b):
                if not y:
                    continue
                row = self.mult[i][j]
                xy = x * y
                for k in range(self.dim):
                    if row[k]:
                        acc[k] += xy * row[k]
        return tuple(acc)

    def is_zero(self, a):
        return not any(a)

    def mult_op(self, a):
        """Matrix of multiplication by a, acting on coordinate columns."""
        M = linalg.zeros(self.dim, self.dim)
        for j in range(self.dim):
            for i, x in enumerate(a):
                if not x:
                    continue
                row = self.mult[i][j]
                for k in range(self.dim):
                    if row[k]:
                        M[k][j] += x * row[k]
        return M

    def is_unit(self, a):
        return linalg.inverse(self.mult_op(a)) is not None

    def inv(self, a):
        """Multiplicative inverse; raises on non-units."""
        Minv = linalg.inverse(self.mult_op(a))
        if Minv is None:
            raise AlgebraError("element is not a unit: %r" % (a,))
        return tuple(linalg.matvec(Minv, list(self.one())))

    # -- structure

    def validate(self):
        """Check unit, commutativity, associativity on the whole basis.

        Returns None or a (axiom, witness) pair describing the first failure.
        """
        one = self.one()
        basis = [tuple(F1 if i == j else F0 for j in range(self.dim))
                 for i in range(self.dim)]
        for i, b in enumerate(basis):
            if self.mul(one, b) != b or self.mul(b, one) != b:
                return ("unit", self.labels[i])
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                if self.mult[i][j] != self.mult[j][i]:
                    return ("commutativity", (self.labels[i], self.labels[j]))
        for i in range(self.dim):
            for j in range(self.dim):
                for k in range(self.dim):
                    lhs = self.mul(self.mul(basis[i], basis[j]), basis[k])
                    rhs = self.mul(basis[i], self.mul(basis[j], basis[k]))
                    if lhs != rhs:
                        return ("associativity",
                                (self.labels[i], self.labels[j], self.labels[k]))
        return None

    def derivation_basis(self):
        """Ordered basis of the module of Q-linear derivations, as matrices.

        A matrix D is a derivation iff D(b_i b_j) = D(b_i) b_j + b_i D(b_j)
        for all basis pairs; we solve that linear system over Q and take the
        canonical echelon kernel basis.
        """
        if self._derivations is not None:
            return self._derivations
        n = self.dim
        rows = []
        # unknowns: D[r][c], flattened row-major
        for i in range(n):
            for j in range(i, n):
                prod = self.mult[i][j]
                for r in range(n):
                    row = [F0] * (n * n)
                    # D(b_i b_j) coordinate r
                    for k in range(n):
                        if prod[k]:
                            row[r * n + k] += prod[k]
                    # minus D(b_i) b_j coordinate r: D(b_i) = sum_k D[k][i] b_k
                    for k in range(n):
                        coeff = self.mult[k][j][r]
                        if coeff:
                            row[k * n + i] -= coeff
                    # minus b_i D(b_j) coordinate r
                    for k in range(n):
                        coeff = self.mult[i][k][r]
                        if coeff:
                            row[k * n + j] -= coeff
                    if any(row):
                        rows.append(row)
        if not rows:
            vecs = linalg.identity(n * n)
        else:
            vecs = linalg.kernel_basis(rows)
        mats = []
        for v in vecs:
            mats.append([[v[r * n + c] for c in range(n)] for r in range(n)])
        self._derivations = mats
        return mats

    def derivation_from_coords(self, coords):
        basis = self.derivation_basis()
        assert len(coords) == len(basis), "derivation coordinate length"
        D = linalg.zeros(self.dim, self.dim)
        for c, B in zip(coords, basis):
            c = frac(c)
            if c:
                D = linalg.add(D, linalg.scale(c, B))
        return D

    def is_derivation(self, D):
        n = self.dim
        basis = [tuple(F1 if i == j else F0 for j in range(n)) for i in range(n)]
        for i in range(n):
            for j in range(i, n):
                lhs = linalg.matvec(D, list(self.mult[i][j]))
                Di = linalg.matvec(D, list(basis[i]))
                Dj = linalg.matvec(D, list(basis[j]))
                rhs = self.add(self.mul(tuple(Di), basis[j]),
                               self.mul(basis[i], tuple(Dj)))
                if tuple(lhs) != rhs:
                    return False
        return True

    def coordinate_derivation(self, f_coords, var):
        """The derivation f * d/dx_var of a jet algebra, f given by coords.

        Only multiples that preserve the truncation ideal are derivations;
        callers must pass f with zero constant term.
        """
        assert self.kind == "jet"
        n, order = self.jet_params
        assert 0 <= var < n
        D = linalg.zeros(self.dim, self.dim)
        # d/dx_var on monomials, then multiply by f
        for j, e in enumerate(self.monomials):
            if e[var] == 0:
                continue
            de = list(e)
            de[var] -= 1
            coeff = Fraction(e[var])
            base = [F0] * self.dim
            base[self.mono_index[tuple(de)]] = coeff
            col = self.mul(f_coords, tuple(base))
            for r in range(self.dim):
                D[r][j] = col[r]
        assert self.is_derivation(D), "f must vanish at the base point"
        return D
